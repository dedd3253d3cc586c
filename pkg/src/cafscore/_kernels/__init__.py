"""Kernel selection: compiled extension when importable, numpy otherwise.

Set CAF_PURE_KERNELS=1 to force the fallback (used by the benchmark).
"""

from __future__ import annotations

import os

if os.environ.get("CAF_PURE_KERNELS"):
    from . import pure as _impl

    KERNEL_BACKEND = "pure"
else:
    try:
        from . import _fast as _impl  # type: ignore[attr-defined]

        KERNEL_BACKEND = "compiled"
    except ImportError:
        from . import pure as _impl

        KERNEL_BACKEND = "pure"

dot_products = _impl.dot_products
pair_stats = _impl.pair_stats

__all__ = ["KERNEL_BACKEND", "dot_products", "pair_stats"]
