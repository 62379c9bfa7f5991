"""Kernel backend selection.

Hot loops are compiled with numba when it is importable.  Setting the
environment variable ``DYNPERC_BACKEND=numpy`` (or ``DYNPERC_DISABLE_NUMBA=1``)
forces the pure-numpy fallback kernels; the choice is made once, at import.
"""
from __future__ import annotations

import os

_requested = os.environ.get("DYNPERC_BACKEND", "").strip().lower()
_disabled = os.environ.get("DYNPERC_DISABLE_NUMBA", "").strip() not in ("", "0", "false")

try:
    import numba  # noqa: F401

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

if _requested not in ("", "numba", "numpy"):
    raise ValueError(f"DYNPERC_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

USE_NUMBA = HAS_NUMBA and not _disabled and _requested != "numpy"
BACKEND = "numba" if USE_NUMBA else "numpy"
