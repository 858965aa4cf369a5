"""Backend selection for the lattice loops.

The compiled extension is used when it was built; set ``BARDINA_PURE_PYTHON=1``
to force the NumPy fallback.
"""

from __future__ import annotations

import os

from . import _pykernels

try:
    if os.environ.get("BARDINA_PURE_PYTHON"):
        raise ImportError("pure-python backend requested")
    from . import _ckernels as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"

ball_sum_inv_sq = _impl.ball_sum_inv_sq
exp_ball_sum = _impl.exp_ball_sum
ewald_real_sum = _impl.ewald_real_sum
count_wedge = _impl.count_wedge

__all__ = ["BACKEND", "ball_sum_inv_sq", "exp_ball_sum", "ewald_real_sum", "count_wedge"]
