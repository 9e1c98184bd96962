"""Kernel backend selection.

``HEATCELL_BACKEND=numpy`` forces the pure-numpy kernels; the default is the
numba-compiled set, falling back to numpy when numba cannot be imported.
"""
import os

_requested = os.environ.get("HEATCELL_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"HEATCELL_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

if _requested == "numba":
    try:
        import numba  # noqa: F401
        BACKEND = "numba"
    except ImportError:  # pragma: no cover - numba is a declared dependency
        BACKEND = "numpy"
else:
    BACKEND = "numpy"
