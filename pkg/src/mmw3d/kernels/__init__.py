"""Hot-kernel selection: the compiled extension when available, otherwise the
NumPy reference. Set MMW3D_FORCE_NUMPY=1 to force the fallback (used by the
benchmark and the cross-kernel tests)."""

import os

from . import numpy_ref

if os.environ.get("MMW3D_FORCE_NUMPY") == "1":
    _impl = numpy_ref
    KERNEL_BACKEND = "numpy"
else:
    try:
        from . import _if_accum as _impl
        KERNEL_BACKEND = "compiled"
    except ImportError:
        _impl = numpy_ref
        KERNEL_BACKEND = "numpy"

accumulate_frame = _impl.accumulate_frame

__all__ = ["accumulate_frame", "KERNEL_BACKEND", "numpy_ref"]
