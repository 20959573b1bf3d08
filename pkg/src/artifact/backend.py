"""Backend selection for the hot numerical kernels.

The compiled extension (``artifact._kernels_cy``) is preferred when it
imported cleanly; otherwise the pure numpy module is used.  Set
``ARTIFACT_BACKEND=py`` or ``ARTIFACT_BACKEND=cy`` to force a choice
(``cy`` raises if the extension is unavailable).

All kernel functions operate on 1-d float64 arrays; shape handling is the
caller's job (see artifact.special_math).
"""
from __future__ import annotations

import os

from . import _kernels_py

_forced = os.environ.get("ARTIFACT_BACKEND", "").strip().lower()

if _forced == "py":
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels_cy as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        if _forced == "cy":
            raise ImportError(
                "ARTIFACT_BACKEND=cy but the compiled kernels are not built; "
                "reinstall with Cython and a C compiler available"
            )
        _impl = _kernels_py
        BACKEND = "python"

lambert_w0_arr = _impl.lambert_w0
lambert_w_exp_arr = _impl.lambert_w_exp
crra_log_z_arr = _impl.crra_log_z
