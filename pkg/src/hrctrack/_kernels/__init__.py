"""Backend selection for the hot kernels.

Two interchangeable implementations exist: a compiled one (numba, used when
available) and a pure-numpy fallback. The environment variable
``HRCTRACK_BACKEND`` picks one at import time:

- ``auto`` (default): compiled when numba imports, numpy otherwise
- ``numba``: compiled, error if numba is unavailable
- ``numpy``: pure-numpy fallback

`set_backend` / `use` switch at runtime, e.g. for benchmarking both.
"""

from __future__ import annotations

import contextlib
import os
import warnings
from types import ModuleType

__all__ = ["active", "backend_name", "set_backend", "use", "available_backends"]

_VALID = ("auto", "numpy", "numba")
_active: ModuleType | None = None


def _load(name: str) -> ModuleType:
    if name == "numpy":
        from . import _numpy_backend

        return _numpy_backend
    if name == "numba":
        from . import _numba_backend

        return _numba_backend
    raise ValueError(f"unknown backend {name!r}, expected one of {_VALID}")


def _resolve(name: str) -> ModuleType:
    if name == "auto":
        try:
            return _load("numba")
        except ImportError as exc:
            warnings.warn(
                f"compiled backend unavailable ({exc}); falling back to numpy",
                RuntimeWarning,
                stacklevel=3,
            )
            return _load("numpy")
    return _load(name)


def set_backend(name: str) -> None:
    """Select the kernel implementation by name ('auto', 'numpy', 'numba')."""
    if name not in _VALID:
        raise ValueError(f"unknown backend {name!r}, expected one of {_VALID}")
    global _active
    _active = _resolve(name)


def active() -> ModuleType:
    """The currently selected backend module (resolving the environment
    variable on first use)."""
    global _active
    if _active is None:
        requested = os.environ.get("HRCTRACK_BACKEND", "auto").strip().lower()
        if requested not in _VALID:
            raise ValueError(
                f"HRCTRACK_BACKEND={requested!r} not understood, expected one of {_VALID}"
            )
        _active = _resolve(requested)
    return _active


def backend_name() -> str:
    return active().NAME


def available_backends() -> list[str]:
    names = ["numpy"]
    try:
        _load("numba")
        names.append("numba")
    except ImportError:
        pass
    return names


@contextlib.contextmanager
def use(name: str):
    """Temporarily switch backends (used by tests and the benchmark)."""
    global _active
    previous = active()
    set_backend(name)
    try:
        yield _active
    finally:
        _active = previous
