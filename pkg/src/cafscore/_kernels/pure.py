"""Pure numpy kernels; the fallback when the compiled extension is absent."""

from __future__ import annotations

import numpy as np


def dot_products(mat, vec):
    """Row-wise dot products of ``mat`` (n, d) against ``vec`` (d,)."""

    m = np.ascontiguousarray(mat, dtype=np.float64)
    v = np.ascontiguousarray(vec, dtype=np.float64)
    if m.ndim != 2 or v.ndim != 1 or m.shape[1] != v.shape[0]:
        raise ValueError(f"shape mismatch: {m.shape} @ {v.shape}")
    return m @ v


def pair_stats(x, y):
    """Classify all index pairs by order agreement.

    Returns (concordant, discordant, ties_x_only, ties_y_only, ties_both)
    as Python ints.  Exact float equality defines a tie.
    """

    xa = np.ascontiguousarray(x, dtype=np.float64)
    ya = np.ascontiguousarray(y, dtype=np.float64)
    if xa.ndim != 1 or xa.shape != ya.shape:
        raise ValueError(f"inputs must be equal-length 1-d arrays: {xa.shape} vs {ya.shape}")
    n = xa.shape[0]
    conc = disc = tx = ty = txy = 0
    for i in range(n - 1):
        dx = xa[i] - xa[i + 1 :]
        dy = ya[i] - ya[i + 1 :]
        zx = dx == 0.0
        zy = dy == 0.0
        both = zx & zy
        txy += int(both.sum())
        tx += int((zx & ~zy).sum())
        ty += int((zy & ~zx).sum())
        prod = np.sign(dx) * np.sign(dy)
        conc += int((prod > 0).sum())
        disc += int((prod < 0).sum())
    return conc, disc, tx, ty, txy
