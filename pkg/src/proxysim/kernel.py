"""Kernel backend selection.

The compiled extension is preferred when present; set ``PROXYSIM_PURE=1``
to force the pure-Python fallback. Both backends are bit-identical (see
``tests/test_kernel.py``), so the choice never affects digests.
"""

from __future__ import annotations

import os

if os.environ.get("PROXYSIM_PURE", "") not in ("", "0"):
    from proxysim import _kernel_py as _impl
else:
    try:
        from proxysim import _ckernel as _impl  # type: ignore[no-redef]
    except ImportError:
        from proxysim import _kernel_py as _impl  # type: ignore[no-redef]

BACKEND: str = _impl.BACKEND
wrap_angle = _impl.wrap_angle
planar_distance = _impl.planar_distance
drive_step = _impl.drive_step
turn_budget = _impl.turn_budget
