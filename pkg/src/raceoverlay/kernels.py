"""Kernel backend selection.

Imports the compiled extension when present, otherwise the pure-Python twin.
Set ``OVERLAY_KERNEL_BACKEND`` to ``c`` or ``py`` to force a backend (``c``
raises if the extension is missing); anything else means auto.
"""

from __future__ import annotations

import os

_forced = os.environ.get("OVERLAY_KERNEL_BACKEND", "auto").strip().lower()

if _forced in ("py", "python"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels_c as _impl  # type: ignore[no-redef]
    except ImportError:
        if _forced == "c":
            raise
        from . import _kernels_py as _impl  # type: ignore[no-redef]

BACKEND: str = _impl.BACKEND

wrap_angle = _impl.wrap_angle
rotation_matrix = _impl.rotation_matrix
camera_frame_point = _impl.camera_frame_point
project_point_k = _impl.project_point_k
project_cuboid_k = _impl.project_cuboid_k
prior_support = _impl.prior_support
