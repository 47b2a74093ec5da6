"""Hot-loop kernels with a compiled (Cython) core and a pure-Python fallback.

The backend is chosen at import: the compiled module if it was built, else the
Python twin. Set ``CECHECG_BACKEND=python`` to force the fallback.
"""
import os
import warnings

from . import _pykernels

_requested = os.environ.get("CECHECG_BACKEND", "auto").lower()

_compiled = None
if _requested != "python":
    try:
        from . import _ckernels as _compiled
    except ImportError:
        if _requested == "compiled":
            raise
        warnings.warn("compiled kernels unavailable; using pure-Python fallback", RuntimeWarning)

_active = _compiled if _compiled is not None else _pykernels
BACKEND = "compiled" if _compiled is not None else "python"


def available_backends():
    return ["compiled", "python"] if _compiled is not None else ["python"]


def get_backend(name=None):
    """Module implementing the kernel API for ``name`` (default: active one)."""
    if name is None:
        return _active
    if name == "python":
        return _pykernels
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernels were not built")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def meb_diameters(coords, simplices):
    return _active.meb_diameters(coords, simplices)


def min_enclosing_ball(points):
    return _active.min_enclosing_ball(points)


def reduce_boundary(indptr, indices):
    return _active.reduce_boundary(indptr, indices)
