"""Ray-optics limit: iterate transverse rays through the moving cavity.

One round trip maps the ray state (x, x') at the left mirror by the
round-trip matrix sampled at the start of the trip.  Along a damping
schedule the displacement performs a damped oscillation,

    x_{n+1} = cos(theta) (1 + e^{-dg}) x_n - e^{-dg} x_{n-1},

with dg the friction accumulated during one trip; for constant friction the
characteristic roots of that recurrence are a complex pair of modulus
exp(-gamma/2), so envelopes contract at rate gamma/2 per trip.  Two
decoupled transverse axes iterated through the same matrices trace a
contracting pattern whose instantaneous orbit ellipse shrinks at the same
rate.
"""

import math

import numpy as np

from .errors import ValidationError
from .schedule import MirrorSchedule

#: Local maxima of |x| below this fraction of the global peak are ignored
#: when fitting envelopes (guards the log against zero crossings).
_PEAK_FLOOR = 1e-12


class RayState:
    """Transverse ray state: displacement x and paraxial angle x'."""

    __slots__ = ("x", "xp")

    def __init__(self, x, xp):
        self.x = float(x)
        self.xp = float(xp)

    def __repr__(self):
        return "RayState(x=%r, xp=%r)" % (self.x, self.xp)


class RayTrace:
    """Per-round-trip samples of one (or two) transverse ray components.

    ``n`` holds the integer trip indices; ``x``/``xp`` the first transverse
    axis and, when produced by :func:`lissajous`, ``y``/``yp`` the second.
    """

    def __init__(self, n, x, xp, y=None, yp=None, sched=None):
        self.n = np.asarray(n)
        self.x = np.asarray(x, dtype=float)
        self.xp = np.asarray(xp, dtype=float)
        self.y = None if y is None else np.asarray(y, dtype=float)
        self.yp = None if yp is None else np.asarray(yp, dtype=float)
        self.sched = sched

    @property
    def has_y(self):
        return self.y is not None

    def rows(self):
        """Yield CSV rows (n, x, xp[, y, yp])."""
        for i in range(self.n.size):
            if self.has_y:
                yield (int(self.n[i]), self.x[i], self.xp[i],
                       self.y[i], self.yp[i])
            else:
                yield (int(self.n[i]), self.x[i], self.xp[i])


def _trip_elements(sched, n_max):
    """(a, b, c) arrays for trips 0..n_max-1, sampled at each trip start."""
    starts = np.arange(n_max, dtype=float)
    a, b, c = sched.elements_at(starts)
    return np.broadcast_to(a, b.shape).tolist(), b.tolist(), c.tolist()


def iterate_ray(sched, init, n_max):
    """Iterate a ray for ``n_max`` round trips; returns a :class:`RayTrace`.

    The matrix for trip k -> k+1 is frozen at the mirror positions at the
    start of that trip (time k); in the adiabatic regime gamma << 1 the
    intra-trip mirror motion is negligible.
    """
    n_max = int(n_max)
    if n_max < 1:
        raise ValidationError("n_max must be >= 1")
    if not isinstance(sched, MirrorSchedule):
        raise ValidationError("sched must be a MirrorSchedule")
    a_list, b_list, c_list = _trip_elements(sched, n_max)
    x = np.empty(n_max + 1)
    xp = np.empty(n_max + 1)
    xc, xpc = init.x, init.xp
    x[0], xp[0] = xc, xpc
    for k in range(n_max):
        a, b, c = a_list[k], b_list[k], c_list[k]
        xc, xpc = a * xc + b * xpc, c * xc + a * xpc
        x[k + 1], xp[k + 1] = xc, xpc
    return RayTrace(np.arange(n_max + 1), x, xp, sched=sched)


def iterate_ray_difference(theta, gamma, x0, x1, n_max):
    """Constant-friction second-order recurrence for the displacement.

    Iterates x_{n+1} = cos(theta) (1 + e^{-gamma}) x_n - e^{-gamma} x_{n-1}
    from the seeds (x0, x1); returns the array x_0..x_{n_max}.  Seeded with
    the first two samples of a matrix-iterated trace it reproduces that
    trace to rounding error.
    """
    n_max = int(n_max)
    if n_max < 1:
        raise ValidationError("n_max must be >= 1")
    decay = math.exp(-float(gamma))
    coeff = math.cos(float(theta)) * (1.0 + decay)
    x = np.empty(n_max + 1)
    x[0], x[1] = float(x0), float(x1)
    prev, cur = x[0], x[1]
    for k in range(1, n_max):
        prev, cur = cur, coeff * cur - decay * prev
        x[k + 1] = cur
    return x


def characteristic_roots(theta, gamma):
    """Roots of mu^2 - cos(theta)(1 + e^{-gamma}) mu + e^{-gamma} = 0.

    For an underdamped cavity they form a complex-conjugate pair whose
    common modulus is exp(-gamma/2) (the product of the roots equals
    e^{-gamma}); the first root returned has nonnegative imaginary part.
    """
    decay = math.exp(-float(gamma))
    s = math.cos(float(theta)) * (1.0 + decay)
    disc = complex(s * s - 4.0 * decay)
    root = np.sqrt(disc)
    mu1 = (s + root) / 2.0
    mu2 = (s - root) / 2.0
    if mu1.imag < mu2.imag:
        mu1, mu2 = mu2, mu1
    return complex(mu1), complex(mu2)


def lissajous(sched, init2d, n_max):
    """Iterate two decoupled transverse axes through the same cavity.

    ``init2d`` is (x0, xp0, y0, yp0).  Returns a :class:`RayTrace` carrying
    both axes; the (x_n, y_n) scatter contracts toward the axis as
    exp(-g(n)/2).
    """
    n_max = int(n_max)
    if n_max < 1:
        raise ValidationError("n_max must be >= 1")
    x0, xp0, y0, yp0 = (float(v) for v in init2d)
    a_list, b_list, c_list = _trip_elements(sched, n_max)
    x = np.empty(n_max + 1)
    xp = np.empty(n_max + 1)
    y = np.empty(n_max + 1)
    yp = np.empty(n_max + 1)
    x[0], xp[0], y[0], yp[0] = x0, xp0, y0, yp0
    xc, xpc, yc, ypc = x0, xp0, y0, yp0
    for k in range(n_max):
        a, b, c = a_list[k], b_list[k], c_list[k]
        xc, xpc = a * xc + b * xpc, c * xc + a * xpc
        yc, ypc = a * yc + b * ypc, c * yc + a * ypc
        x[k + 1], xp[k + 1] = xc, xpc
        y[k + 1], yp[k + 1] = yc, ypc
    return RayTrace(np.arange(n_max + 1), x, xp, y, yp, sched=sched)


def pattern_radius(trace):
    """Largest instantaneous orbit radius of a two-axis trace, per trip.

    Under the frozen matrix of trip n the point (x, b(n) x'/sin(theta))
    moves on a circle in each transverse plane, so the 2-d spot traces the
    ellipse (Re(zx e^{-i phi}), Re(zy e^{-i phi})) with zx = x + i b x'/sin
    theta and zy likewise.  The squared semi-major axis of that ellipse is

        R^2 = (|zx|^2 + |zy|^2)/2 + |zx^2 + zy^2|/2,

    a per-trip radius measure that contracts strictly monotonically on a
    damping schedule (the raw per-sample radius does not: the s ~ 3.35
    trips/period stroboscopic sampling aliases it).
    """
    if not trace.has_y:
        raise ValidationError("pattern radius needs a two-axis trace")
    sched = trace.sched
    if sched is None:
        raise ValidationError("trace carries no schedule reference")
    sin_theta = math.sin(sched.theta)
    _, b, _ = sched.elements_at(np.asarray(trace.n, dtype=float))
    zx = trace.x + 1j * b * trace.xp / sin_theta
    zy = trace.y + 1j * b * trace.yp / sin_theta
    r_sq = 0.5 * (np.abs(zx) ** 2 + np.abs(zy) ** 2) \
        + 0.5 * np.abs(zx ** 2 + zy ** 2)
    return np.sqrt(r_sq)


def courant_snyder_invariant(m, x, xp):
    """Quadratic form c x^2 - b x'^2 conserved by a fixed canonical matrix."""
    return m.c * np.asarray(x) ** 2 - m.b * np.asarray(xp) ** 2


def fit_damped_oscillation(n, x):
    """Fit decay rate and period of a damped oscillatory sequence.

    Decay: least squares on the log of the local maxima of |x| (no spectral
    machinery).  Period: least squares of interpolated zero-crossing times
    against the crossing index; consecutive crossings are half a period
    apart.

    Returns a dict {"decay_rate", "period"}; decay_rate is per round trip
    (positive for a contracting envelope).
    """
    n = np.asarray(n, dtype=float)
    x = np.asarray(x, dtype=float)
    if n.size != x.size or n.size < 8:
        raise ValidationError("need at least 8 samples to fit an oscillation")
    mag = np.abs(x)
    peak = mag.max()
    if peak <= 0.0:
        raise ValidationError("trace is identically zero; nothing to fit")
    inner = (mag[1:-1] >= mag[:-2]) & (mag[1:-1] > mag[2:]) \
        & (mag[1:-1] > _PEAK_FLOOR * peak)
    peaks = np.flatnonzero(inner) + 1
    if peaks.size < 2:
        raise ValidationError("too few envelope maxima to fit a decay rate")
    slope = np.polyfit(n[peaks], np.log(mag[peaks]), 1)[0]

    sign_change = np.flatnonzero(x[:-1] * x[1:] < 0.0)
    if sign_change.size < 3:
        raise ValidationError("too few zero crossings to fit a period")
    i = sign_change
    t_cross = n[i] - x[i] * (n[i + 1] - n[i]) / (x[i + 1] - x[i])
    half_period = np.polyfit(np.arange(t_cross.size, dtype=float), t_cross, 1)[0]
    return {"decay_rate": -slope, "period": 2.0 * half_period}


def fit_envelope_rate(n, r):
    """Least-squares slope of log(r) versus n for a positive envelope."""
    n = np.asarray(n, dtype=float)
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0.0):
        raise ValidationError("envelope must be strictly positive")
    return np.polyfit(n, np.log(r), 1)[0]
