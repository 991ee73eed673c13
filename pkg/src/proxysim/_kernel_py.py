"""Pure-Python motion kernels (fallback backend).

This module must stay operation-for-operation identical to the compiled
backend in ``_ckernel.pyx``: same formulas, same evaluation order, same
libm calls, so that both backends produce bit-identical float64 results.
Distances use ``sqrt(dx*dx + dy*dy)`` on purpose; ``math.hypot`` is more
accurate than libm and would diverge from the C build.
"""

from __future__ import annotations

from math import atan2, cos, fabs, fmod, pi, sin, sqrt

TWO_PI = 2.0 * pi
HALF_PI = 0.5 * pi

BACKEND = "python"


def wrap_angle(a: float) -> float:
    """Normalize an angle to the half-open interval (-pi, pi]."""
    a = fmod(a, TWO_PI)
    if a <= -pi:
        a += TWO_PI
    elif a > pi:
        a -= TWO_PI
    return a + 0.0  # fold -0.0


def planar_distance(ax: float, ay: float, bx: float, by: float) -> float:
    dx = bx - ax
    dy = by - ay
    return sqrt(dx * dx + dy * dy)


def drive_step(
    x: float,
    y: float,
    heading: float,
    gx: float,
    gy: float,
    v_max: float,
    w_max: float,
    dt: float,
    allow_reverse: bool,
):
    """Advance a turn-then-drive robot toward one waypoint for up to ``dt`` s.

    The robot first turns in place toward the travel heading (driving in
    reverse when that needs the smaller turn and ``allow_reverse`` is set),
    then translates along the segment, clamping exactly onto the waypoint.

    Returns ``(x, y, heading, dt_left, reached)`` where ``dt_left`` is the
    unused time, nonzero only when the waypoint was reached early.
    """
    dx = gx - x
    dy = gy - y
    dist = sqrt(dx * dx + dy * dy)
    if dist == 0.0:
        return x, y, heading, dt, True
    desired = atan2(dy, dx)
    diff = wrap_angle(desired - heading)
    face = desired
    if allow_reverse and fabs(diff) > HALF_PI:
        face = wrap_angle(desired + pi)
        diff = wrap_angle(face - heading)
    turn_time = fabs(diff) / w_max
    if turn_time >= dt:
        if diff > 0.0:
            heading = wrap_angle(heading + w_max * dt)
        else:
            heading = wrap_angle(heading - w_max * dt)
        return x, y, heading, 0.0, False
    dt_left = dt - turn_time
    step = v_max * dt_left
    if step >= dist:
        dt_left -= dist / v_max
        return gx, gy, face, dt_left, True
    nx = x + cos(desired) * step
    ny = y + sin(desired) * step
    return nx, ny, face, 0.0, False


def turn_budget(heading: float, seg_dir: float, allow_reverse: bool) -> float:
    """In-place turn (radians) needed before driving a segment.

    Mirrors the forward/reverse choice made by :func:`drive_step` so that
    arrival estimates match execution exactly.
    """
    diff = wrap_angle(seg_dir - heading)
    if allow_reverse and fabs(diff) > HALF_PI:
        diff = wrap_angle(wrap_angle(seg_dir + pi) - heading)
    return fabs(diff)
