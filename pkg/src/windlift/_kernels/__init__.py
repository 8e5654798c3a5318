"""Kernel backend selection.

Prefers the compiled extension, falls back to pure numpy. Set
WINDLIFT_KERNEL=python (or =cython) to force a backend; "cython" raises
if the extension is missing rather than silently degrading.
"""
import os

_requested = os.environ.get("WINDLIFT_KERNEL", "auto").lower()

if _requested == "python":
    from . import _pure as _impl

    BACKEND = "python"
elif _requested == "cython":
    from . import _windcore as _impl  # noqa: F401 (import error is the point)

    BACKEND = "cython"
else:
    try:
        from . import _windcore as _impl

        BACKEND = "cython"
    except ImportError:
        from . import _pure as _impl

        BACKEND = "python"

winding_sum = _impl.winding_sum
winding_grad = _impl.winding_grad
nearest_segment = _impl.nearest_segment
