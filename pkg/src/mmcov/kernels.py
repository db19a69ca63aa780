"""Backend selection for the Monte-Carlo SINR kernel.

The compiled extension is used when it imports; setting the environment
variable ``MMCOV_PURE_PYTHON=1`` forces the numpy fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
sinr_batch_full = _kernels_py.sinr_batch_full

if os.environ.get("MMCOV_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        sinr_batch_full = _compiled.sinr_batch_full
        BACKEND = "cython"

__all__ = ["BACKEND", "sinr_batch_full"]
