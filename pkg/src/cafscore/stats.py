"""Rank and linear correlation statistics with explicit tie handling."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import DomainError, UndefinedCorrelationError


def _paired(xs: Sequence[float], ys: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape:
        raise DomainError(f"inputs must be equal-length sequences: {x.shape} vs {y.shape}")
    if x.shape[0] < 2:
        raise DomainError("need at least two observations")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise DomainError("inputs must be finite")
    return x, y


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Linear correlation coefficient, clamped to [-1, 1]."""

    x, y = _paired(xs, ys)
    dx = x - x.mean()
    dy = y - y.mean()
    ssx = float(dx @ dx)
    ssy = float(dy @ dy)
    if ssx == 0.0 or ssy == 0.0:
        raise UndefinedCorrelationError("zero variance on at least one axis")
    r = float(dx @ dy) / math.sqrt(ssx * ssy)
    return max(-1.0, min(1.0, r))


def average_ranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks; equal values share the mean of their rank block."""

    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise DomainError("expected a 1-d sequence")
    order = np.argsort(v, kind="mergesort")
    ranks = np.empty(v.shape[0], dtype=np.float64)
    i = 0
    while i < v.shape[0]:
        j = i
        while j + 1 < v.shape[0] and v[order[j + 1]] == v[order[i]]:
            j += 1
        # ranks i+1 .. j+1 share their mean
        mean_rank = (i + j + 2) / 2.0
        for k in range(i, j + 1):
            ranks[order[k]] = mean_rank
        i = j + 1
    return ranks


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Rank correlation: linear correlation of average ranks."""

    x, y = _paired(xs, ys)
    return pearson(average_ranks(x), average_ranks(y))


def kendall_tau(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Tie-adjusted rank agreement.

    (C - D) / sqrt((C + D + Tx) (C + D + Ty)) where Tx and Ty count pairs
    tied on exactly one axis; pairs tied on both axes drop out entirely.
    """

    x, y = _paired(xs, ys)
    conc, disc, tx, ty, _ = _kernels.pair_stats(x, y)
    fx = conc + disc + tx
    fy = conc + disc + ty
    if fx == 0 or fy == 0:
        raise UndefinedCorrelationError("an axis is entirely tied")
    tau = (conc - disc) / math.sqrt(float(fx) * float(fy))
    return max(-1.0, min(1.0, tau))
