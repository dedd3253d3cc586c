# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: batched row dots and rank-order pair statistics."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def dot_products(mat, vec):
    """Row-wise dot products of ``mat`` (n, d) against ``vec`` (d,)."""

    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] m = np.ascontiguousarray(
        mat, dtype=np.float64
    )
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] v = np.ascontiguousarray(
        vec, dtype=np.float64
    )
    if m.shape[1] != v.shape[0]:
        raise ValueError(f"shape mismatch: ({m.shape[0]}, {m.shape[1]}) @ ({v.shape[0]},)")
    cdef Py_ssize_t n = m.shape[0]
    cdef Py_ssize_t d = m.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] out = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t i, j
    cdef double acc
    for i in range(n):
        acc = 0.0
        for j in range(d):
            acc += m[i, j] * v[j]
        out[i] = acc
    return out


def pair_stats(x, y):
    """Classify all index pairs by order agreement.

    Returns (concordant, discordant, ties_x_only, ties_y_only, ties_both)
    as Python ints.  Exact float equality defines a tie.
    """

    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] xa = np.ascontiguousarray(
        x, dtype=np.float64
    )
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] ya = np.ascontiguousarray(
        y, dtype=np.float64
    )
    if xa.shape[0] != ya.shape[0]:
        raise ValueError(f"inputs must be equal-length 1-d arrays: {xa.shape[0]} vs {ya.shape[0]}")
    cdef Py_ssize_t n = xa.shape[0]
    cdef long long conc = 0, disc = 0, tx = 0, ty = 0, txy = 0
    cdef Py_ssize_t i, j
    cdef double dx, dy
    for i in range(n - 1):
        for j in range(i + 1, n):
            dx = xa[i] - xa[j]
            dy = ya[i] - ya[j]
            if dx == 0.0 and dy == 0.0:
                txy += 1
            elif dx == 0.0:
                tx += 1
            elif dy == 0.0:
                ty += 1
            elif (dx > 0.0) == (dy > 0.0):
                conc += 1
            else:
                disc += 1
    return int(conc), int(disc), int(tx), int(ty), int(txy)
