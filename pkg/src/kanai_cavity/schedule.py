"""Mirror-motion schedules that damp the round-trip matrix adiabatically.

Moving the two cavity planes according to

    l2(n) = f + (l2(0) - f) * exp(g(n))
    l1(n) = f * (2 l2(n) - f (1 - cos theta)) / (2 l2(n) - 2 f)

keeps the diagonal element a = cos(theta) of the round-trip matrix constant
while scaling the off-diagonal elements exponentially:

    b(n) = b(0) exp(-g(n)),      c(n) = c(0) exp(+g(n)).

That exponential scaling is what turns the cavity into an analogue of the
damped oscillator: ray amplitudes and beam spot sizes on the left mirror
contract like exp(-g/2).  On the right mirror the scaling is reversed
(b2 grows, c2 shrinks), which is why the conjugate-plane spot grows while the
product of the two spots stays constant.

The closed forms above are exact; the first-order system they solve (mirror
velocities obtained by inverting the Jacobian of (b, c) with respect to
(l1, l2)) is integrated numerically in :func:`integrate_schedule_ode` purely
as a verification oracle.
"""

import math

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT
from scipy.integrate import solve_ivp

from .core import FrictionProfile
from .errors import InvalidScheduleError, SingularJacobianError, ValidationError
from .paraxial import (ResonatorGeometry, right_mirror_elements,
                       round_trip_elements, round_trip_matrix, stability)


class MirrorSchedule:
    """Time-dependent cavity: initial geometry plus a friction profile.

    The initial geometry must be strictly stable with ``l2(0) > f`` (the
    upper stability domain); otherwise the closed-form trajectories
    degenerate.  The rotation angle ``theta`` is frozen at its initial value
    by construction.
    """

    def __init__(self, geom0, friction):
        if not isinstance(geom0, ResonatorGeometry):
            raise ValidationError("geom0 must be a ResonatorGeometry")
        if not isinstance(friction, FrictionProfile):
            raise ValidationError("friction must be a FrictionProfile")
        info = stability(round_trip_matrix(geom0))
        if not info.stable or info.marginal:
            raise InvalidScheduleError(
                "initial geometry must be strictly stable (|a| < 1); "
                "got a = %r" % info.a)
        if geom0.l2 <= geom0.f:
            raise InvalidScheduleError(
                "schedule requires l2(0) > f (upper stability domain); "
                "got l2(0) = %g, f = %g" % (geom0.l2, geom0.f))
        self.geom0 = geom0
        self.friction = friction
        self.theta = info.theta
        self.a0 = info.a
        a, b, c = round_trip_elements(geom0.s1, geom0.s2)
        _, b2, c2 = right_mirror_elements(geom0.s1, geom0.s2)
        f = geom0.f
        self.b0 = b * f
        self.c0 = c / f
        self.right_b0 = b2 * f
        self.right_c0 = c2 / f

    @property
    def f(self):
        return self.geom0.f

    def positions_at(self, n):
        """Closed-form mirror positions (l1(n), l2(n)); vectorized over n."""
        g, _ = self.friction.evaluate(n)
        f = self.geom0.f
        l2 = f + (self.geom0.l2 - f) * np.exp(g)
        l1 = f * (2.0 * l2 - f * (1.0 - self.a0)) / (2.0 * l2 - 2.0 * f)
        return l1, l2

    def geometry_at(self, n):
        """Geometry snapshot at a single time n."""
        l1, l2 = self.positions_at(float(n))
        return self.geom0.with_positions(l1, l2)

    def elements_at(self, n):
        """Round-trip elements (a, b, c) at the left mirror; vectorized.

        Uses the exact exponential scaling b(0) e^{-g}, c(0) e^{+g}; this is
        algebraically identical to rebuilding the matrix at positions_at(n).
        """
        g, _ = self.friction.evaluate(n)
        eg = np.exp(g)
        a = self.a0 * np.ones_like(np.asarray(g, dtype=float))
        if np.isscalar(g):
            a = self.a0
        return a, self.b0 / eg, self.c0 * eg

    def right_elements_at(self, n):
        """Round-trip elements (a, b2, c2) at the right mirror; vectorized."""
        g, _ = self.friction.evaluate(n)
        eg = np.exp(g)
        a = self.a0 * np.ones_like(np.asarray(g, dtype=float))
        if np.isscalar(g):
            a = self.a0
        return a, self.right_b0 * eg, self.right_c0 / eg

    def matrix_at(self, n, plane="left_mirror"):
        """Round-trip matrix rebuilt from the mirror positions at time n."""
        return round_trip_matrix(self.geometry_at(n), plane=plane)

    def half_matrix_at(self, n):
        """Half-trip matrix (left mirror to right mirror) at time n."""
        from .paraxial import half_trip_matrix
        return half_trip_matrix(self.geometry_at(n))

    def csv_rows(self, n_values):
        """Dump rows (n, g, l1/f, l2/f, a, b/f, c*f) for the given times."""
        n_values = np.atleast_1d(np.asarray(n_values, dtype=float))
        g, _ = self.friction.evaluate(n_values)
        l1, l2 = self.positions_at(n_values)
        a, b, c = self.elements_at(n_values)
        f = self.geom0.f
        for i in range(n_values.size):
            yield (n_values[i], g[i], l1[i] / f, l2[i] / f, a[i],
                   b[i] / f, c[i] * f)


def positions_at(sched, n):
    """Mirror positions (l1(n), l2(n)) of a schedule; vectorized over n."""
    return sched.positions_at(n)


def _schedule_rhs_factory(friction, f):
    def rhs(n, y):
        s1, s2 = y[0] / f, y[1] / f
        _, gdot = friction.evaluate(n)
        h = s1 + s2 - s1 * s2
        b = 2.0 * (1.0 - s1) * h
        c = -2.0 * (1.0 - s2)
        db_ds1 = -2.0 * h + 2.0 * (1.0 - s1) * (1.0 - s2)
        db_ds2 = 2.0 * (1.0 - s1) ** 2
        dc_ds2 = 2.0
        det = db_ds1 * dc_ds2
        if abs(det) < 1e-12:
            raise SingularJacobianError(
                "Jacobian of (b, c) w.r.t. (l1, l2) is singular at "
                "n=%g, l1/f=%g, l2/f=%g" % (n, s1, s2))
        ds2 = c * gdot / dc_ds2
        ds1 = (-b * gdot - db_ds2 * ds2) / db_ds1
        return [ds1 * f, ds2 * f]
    return rhs


def integrate_schedule_ode(geom0, friction, n_max, dn, rtol=1e-10, atol=1e-12):
    """Integrate the mirror-velocity system as an independent oracle.

    The system is dL/dn = J^{-1} (-b, c)^T gdot with J the Jacobian of
    (b, c) with respect to (l1, l2); its solution must agree with the
    closed-form trajectories.  Returns (n_values, l1_values, l2_values).
    """
    if n_max <= 0.0 or dn <= 0.0:
        raise ValidationError("n_max and dn must be positive")
    sched = MirrorSchedule(geom0, friction)  # validates the initial state
    n_values = np.arange(0.0, float(n_max) + 0.5 * dn, dn)
    rhs = _schedule_rhs_factory(friction, geom0.f)
    result = solve_ivp(rhs, (0.0, float(n_values[-1])), [geom0.l1, geom0.l2],
                       method="DOP853", t_eval=n_values, rtol=rtol, atol=atol)
    if not result.success:
        raise ValidationError("schedule ODE integration failed: %s" % result.message)
    del sched
    return result.t, result.y[0], result.y[1]


def mirror_speed_estimate(sched, f_meters, n):
    """Physical right-mirror speed |dl2/dt| in meters per second.

    Uses the round-trip time T_R = (l1 + l2)/c_light as the unit of time per
    trip, so v = gdot * (l2 - f) / T_R; as l2 grows the speed approaches
    gdot * c_light.
    """
    f_meters = float(f_meters)
    if f_meters <= 0.0:
        raise ValidationError("physical focal length must be > 0")
    l1, l2 = sched.positions_at(float(n))
    scale = f_meters / sched.f
    l1_m, l2_m, f_m = l1 * scale, l2 * scale, f_meters
    _, gdot = sched.friction.evaluate(float(n))
    round_trip_time = (l1_m + l2_m) / SPEED_OF_LIGHT
    return abs(gdot) * (l2_m - f_m) / round_trip_time
