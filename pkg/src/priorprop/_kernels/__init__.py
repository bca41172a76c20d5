"""Kernel selection: compiled extension if available, pure Python otherwise.

Set ``PRIORPROP_PURE_PYTHON=1`` to force the fallback (used by the benchmark
and the backend-equivalence tests). Both backends are bit-identical.
"""

import os

if os.environ.get("PRIORPROP_PURE_PYTHON"):
    from priorprop._kernels.sweep_py import gs_sweep

    BACKEND = "python"
else:
    try:
        from priorprop._kernels._sweep import gs_sweep  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        from priorprop._kernels.sweep_py import gs_sweep  # type: ignore[no-redef]

        BACKEND = "python"

__all__ = ["gs_sweep", "BACKEND"]
