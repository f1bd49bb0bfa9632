"""Collision kernel dispatch.

Prefers the compiled extension; falls back to the numpy implementation
when the extension is missing or DRIVEBENCH_PURE_PYTHON=1 is set.
"""

import os

from . import _fallback

if os.environ.get("DRIVEBENCH_PURE_PYTHON") == "1":
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _core as _impl
        BACKEND = "native"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"

obb_overlap = _impl.obb_overlap
overlap_mask = _impl.overlap_mask
plan_collides = _impl.plan_collides
