"""Kernel backend selection: compiled extension if available, NumPy otherwise.

``polyspec.backend.kernels`` exposes the active implementation; set the
environment variable ``POLYSPEC_PURE_PYTHON=1`` before import to force
the fallback (used by the benchmark and the parity tests).
"""

from __future__ import annotations

import os

if os.environ.get("POLYSPEC_PURE_PYTHON", "0") == "1":
    from . import _kernels_py as kernels
else:
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as kernels


def have_compiled() -> bool:
    return bool(getattr(kernels, "COMPILED", False))
