"""Hot numeric kernels with a compiled core and a numpy fallback.

The Cython extension is preferred when importable; setting the environment
variable EDGEMVS_PURE_KERNELS=1 forces the numpy path (used by tests and the
benchmark to compare backends). Both expose the same two functions and
return identical results.
"""

from __future__ import annotations

import os

from . import _pure

if os.environ.get("EDGEMVS_PURE_KERNELS") == "1":
    _impl = _pure
    BACKEND = "pure"
else:
    try:
        from . import _fast as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        _impl = _pure
        BACKEND = "pure"

count_within = _impl.count_within
assign_labels = _impl.assign_labels

__all__ = ["count_within", "assign_labels", "BACKEND"]
