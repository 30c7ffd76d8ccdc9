"""Numeric kernels with a compiled core and a pure-Python fallback.

The compiled backend (Cython) is used when its extension module imported
successfully; otherwise the pure backend takes over transparently. Setting
the environment variable DCGEVAL_PURE_PYTHON to a non-empty value other than
"0" forces the pure backend. Both backends are bit-identical by construction
(same double-precision operations in the same order); tests assert equality.
"""

import os

from . import _pure

if os.environ.get("DCGEVAL_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pure
    BACKEND = "pure"
else:
    try:
        from . import _core as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _pure
        BACKEND = "pure"

sample_logged_items = _impl.sample_logged_items
dcg_values = _impl.dcg_values
ideal_dcg_values = _impl.ideal_dcg_values

__all__ = ["BACKEND", "sample_logged_items", "dcg_values", "ideal_dcg_values"]
