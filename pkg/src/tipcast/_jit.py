"""Optional numba acceleration.

Every hot-path function in the package is written as plain scalar Python and
decorated with :func:`maybe_njit`. When numba is importable (and not disabled
via the TIPCAST_NO_JIT environment variable) the function is compiled with
nogil=True so worker threads can overlap; otherwise the undecorated function
is used as-is. Both paths execute the same source.
"""

from __future__ import annotations

import os

HAVE_NUMBA = False
_njit = None

if not os.environ.get("TIPCAST_NO_JIT"):
    try:
        from numba import njit as _njit  # type: ignore

        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        _njit = None


def maybe_njit(fn=None, **kwargs):
    """Apply numba.njit(nogil=True) when available, else return fn unchanged."""
    kwargs.setdefault("nogil", True)
    kwargs.setdefault("cache", False)

    def wrap(f):
        if HAVE_NUMBA:
            return _njit(**kwargs)(f)
        return f

    if fn is not None:
        return wrap(fn)
    return wrap
