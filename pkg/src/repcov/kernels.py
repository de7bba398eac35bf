"""Backend selection for the hot numeric kernels.

The numba kernels are used when numba imports cleanly; set the
environment variable ``REPCOV_DISABLE_NUMBA=1`` (before import) to force
the pure-numpy path. ``repcov bench`` compares the two.
"""

from __future__ import annotations

import os

__all__ = [
    "BACKEND",
    "HAVE_NUMBA",
    "admm_core",
    "soft_threshold_offdiag_raw",
    "psd_floor_raw",
    "backend_module",
]

_TRUTHY = {"1", "true", "yes", "on"}


def _numba_disabled() -> bool:
    return os.environ.get("REPCOV_DISABLE_NUMBA", "").strip().lower() in _TRUTHY


try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

if HAVE_NUMBA and not _numba_disabled():
    from ._kernels_numba import admm_core, psd_floor_raw, soft_threshold_offdiag_raw

    BACKEND = "numba"
else:
    from ._kernels_numpy import admm_core, psd_floor_raw, soft_threshold_offdiag_raw

    BACKEND = "numpy"


def backend_module(name: str):
    """Import a kernel backend by name (for benchmarks and equivalence tests)."""
    if name == "numba":
        from . import _kernels_numba

        return _kernels_numba
    if name == "numpy":
        from . import _kernels_numpy

        return _kernels_numpy
    raise ValueError(f"unknown backend {name!r}")
