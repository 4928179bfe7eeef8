"""Kernel backend selection.

Hot loops are written once as plain numpy code and, when numba is
available, also compiled with ``numba.njit``.  Set ``ADMOT_BACKEND=numpy``
to force the uncompiled path (useful for debugging and for the backend
benchmark).
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

BACKENDS = ("numba", "numpy")


def requested_backend():
    name = os.environ.get("ADMOT_BACKEND", "numba").strip().lower()
    if name not in BACKENDS:
        raise ValueError(f"ADMOT_BACKEND must be one of {BACKENDS}, got {name!r}")
    return name


def numba_available():
    return numba is not None


def active_backend():
    name = requested_backend()
    if name == "numba" and not numba_available():
        return "numpy"
    return name


def dual(func):
    """Return ``{"numpy": func, "numba": njit(func)}`` for a kernel.

    Compilation is lazy (on first call), so importing the package stays
    cheap even when numba is present.
    """
    impls = {"numpy": func}
    if numba_available():
        impls["numba"] = numba.njit(cache=True)(func)
    else:
        impls["numba"] = func
    return impls


def pick(impls, backend=None):
    return impls[backend or active_backend()]
