"""Backend selection for the Monte Carlo inner loops.

The compiled extension is used when it imports; otherwise the numpy
fallback is used.  Switching is explicit via :func:`set_backend`.
"""
from __future__ import annotations

from types import ModuleType

import numpy as np

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # pragma: no cover - depends on the build
    _compiled = None

_active: ModuleType = _compiled if _compiled is not None else _kernels_py


def available_backends() -> list:
    return (["compiled"] if _compiled is not None else []) + ["python"]


def backend() -> str:
    return "compiled" if _active is _compiled and _compiled is not None else "python"


def set_backend(name: str) -> None:
    global _active
    if name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built")
        _active = _compiled
    elif name == "python":
        _active = _kernels_py
    else:
        raise ValueError(f"unknown backend {name!r}")


def em_step(*args):
    return _active.em_step(*args)


def class_bump_sum(*args):
    return _active.class_bump_sum(*args)


def neumaier_sum(values) -> float:
    return float(_active.neumaier_sum(values))


def _stacked(fn, g):
    g = np.ascontiguousarray(g, dtype=float)
    shape = g.shape
    return fn(g.reshape((-1,) + shape[-2:])), shape


def spd_inv_det(g):
    """``(G^{-1}, det G)`` for a stack of SPD matrices of any leading shape."""
    (inv, det), shape = _stacked(_active.spd_inv_det, g)
    return np.asarray(inv).reshape(shape), np.asarray(det).reshape(shape[:-2])


def spd_inv_sqrt(g):
    """Principal ``G^{-1/2}`` for a stack of SPD matrices of any leading shape."""
    out, shape = _stacked(_active.spd_inv_sqrt, g)
    return np.asarray(out).reshape(shape)
