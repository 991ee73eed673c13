# cython: language_level=3, boundscheck=False, cdivision=True
"""Compiled motion kernels.

Mirrors ``_kernel_py`` op-for-op; see the note there about bit-identical
float64 behaviour across the two backends.
"""

from libc.math cimport atan2, cos, fabs, fmod, sin, sqrt

cdef double PI = 3.141592653589793
cdef double TWO_PI = 2.0 * PI
cdef double HALF_PI = 0.5 * PI

BACKEND = "cython"


cpdef double wrap_angle(double a):
    """Normalize an angle to the half-open interval (-pi, pi]."""
    a = fmod(a, TWO_PI)
    if a <= -PI:
        a += TWO_PI
    elif a > PI:
        a -= TWO_PI
    return a + 0.0


cpdef double planar_distance(double ax, double ay, double bx, double by):
    cdef double dx = bx - ax
    cdef double dy = by - ay
    return sqrt(dx * dx + dy * dy)


cpdef tuple drive_step(
    double x,
    double y,
    double heading,
    double gx,
    double gy,
    double v_max,
    double w_max,
    double dt,
    bint allow_reverse,
):
    """One turn-then-drive step toward a waypoint; see the Python twin."""
    cdef double dx = gx - x
    cdef double dy = gy - y
    cdef double dist = sqrt(dx * dx + dy * dy)
    cdef double desired, diff, face, turn_time, dt_left, step
    if dist == 0.0:
        return x, y, heading, dt, True
    desired = atan2(dy, dx)
    diff = wrap_angle(desired - heading)
    face = desired
    if allow_reverse and fabs(diff) > HALF_PI:
        face = wrap_angle(desired + PI)
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
    return x + cos(desired) * step, y + sin(desired) * step, face, 0.0, False


cpdef double turn_budget(double heading, double seg_dir, bint allow_reverse):
    """In-place turn (radians) needed before driving a segment."""
    cdef double diff = wrap_angle(seg_dir - heading)
    if allow_reverse and fabs(diff) > HALF_PI:
        diff = wrap_angle(wrap_angle(seg_dir + PI) - heading)
    return fabs(diff)
