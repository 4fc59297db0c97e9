"""Friction profiles and the classical damped transverse oscillator.

Time is measured in round trips: ``n`` counts traversals of the resonator and
is treated as a continuous variable inside this module (the per-trip maps in
the ray and wave modules sample it at integers).  Damping enters through a
dimensionless exponent ``g(n)`` with rate ``gdot = dg/dn``; for a constant
friction rate ``gamma`` the exponent is ``g(n) = gamma * n`` and ``g(0) = 0``
always.

A friction profile induces the classical damped-oscillator equation

    x''(n) + gdot(n) x'(n) + omega**2 x(n) = 0

whose fundamental solutions ``u1`` (sine-like: u1(0)=0, u1'(0)=1) and ``u2``
(cosine-like: u2(0)=1, u2'(0)=0) drive everything else in the package: ray
envelopes, spot-size collapse, and the analytic wave propagator are all
expressed through them.  Their Wronskian

    W(n) = u1'(n) u2(n) - u2'(n) u1(n)

equals ``exp(-g(n))`` identically, which doubles as the module's main
self-test.
"""

import csv
import math

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator

from .errors import DomainError, UnsupportedRegimeError, ValidationError

#: Default relative tolerance of the fundamental-solution ODE integrator.
ODE_RTOL = 1e-11
#: Default absolute tolerance of the fundamental-solution ODE integrator.
ODE_ATOL = 1e-13


class FrictionProfile:
    """Damping exponent ``g(n)`` and its derivative on ``n >= 0``.

    Two kinds are supported:

    * ``"constant"`` -- ``g(n) = gamma * n`` with ``gamma >= 0``, defined for
      every ``n >= 0``.
    * ``"tabulated"`` -- monotone (PCHIP) interpolation of samples
      ``(n_i, g_i)``; queries outside the tabulated range raise
      :class:`DomainError`.

    ``g`` must be nondecreasing with ``g(0) = 0``.  Instances are immutable
    and safe to share between threads.
    """

    def __init__(self, kind, gamma=None, n_samples=None, g_samples=None):
        if kind == "constant":
            if gamma is None:
                raise ValidationError("constant friction requires gamma")
            gamma = float(gamma)
            if not math.isfinite(gamma) or gamma < 0.0:
                raise ValidationError(
                    "friction rate gamma must be finite and >= 0, got %r" % gamma)
            self.gamma = gamma
            self.n_max = math.inf
            self.nodes = None
            self._interp = None
            self._dinterp = None
        elif kind == "tabulated":
            n = np.asarray(n_samples, dtype=float)
            g = np.asarray(g_samples, dtype=float)
            if n.ndim != 1 or n.shape != g.shape or n.size < 2:
                raise ValidationError(
                    "tabulated friction needs matching 1-d n and g arrays "
                    "with at least two samples")
            if not np.all(np.isfinite(n)) or not np.all(np.isfinite(g)):
                raise ValidationError("tabulated friction samples must be finite")
            if np.any(np.diff(n) <= 0.0):
                raise ValidationError("tabulated n values must be strictly increasing")
            if n[0] != 0.0:
                raise ValidationError("tabulated friction must start at n = 0")
            if abs(g[0]) > 1e-12:
                raise ValidationError("friction exponent must satisfy g(0) = 0")
            if np.any(np.diff(g) < -1e-12):
                raise ValidationError("friction exponent g must be nondecreasing")
            self.gamma = None
            self.n_max = float(n[-1])
            self.nodes = n.copy()
            self._interp = PchipInterpolator(n, g)
            self._dinterp = self._interp.derivative()
        else:
            raise ValidationError("unknown friction kind %r" % (kind,))
        self.kind = kind

    @classmethod
    def constant(cls, gamma):
        """Constant friction rate: g(n) = gamma * n."""
        return cls("constant", gamma=gamma)

    @classmethod
    def tabulated(cls, n_samples, g_samples):
        """Monotone interpolation through (n, g) samples."""
        return cls("tabulated", n_samples=n_samples, g_samples=g_samples)

    @classmethod
    def from_csv(cls, path):
        """Load a tabulated profile from a two-column CSV with header ``n,g``."""
        with open(path, "r", newline="", encoding="utf-8") as handle:
            reader = csv.reader(handle)
            try:
                header = next(reader)
            except StopIteration:
                raise ValidationError("friction CSV %s is empty" % path)
            if [col.strip() for col in header] != ["n", "g"]:
                raise ValidationError(
                    "friction CSV %s must have header 'n,g', got %r" % (path, header))
            rows = [row for row in reader if row]
        try:
            n = np.array([float(row[0]) for row in rows])
            g = np.array([float(row[1]) for row in rows])
        except (ValueError, IndexError) as exc:
            raise ValidationError("friction CSV %s has a malformed row: %s" % (path, exc))
        return cls.tabulated(n, g)

    def evaluate(self, n):
        """Return ``(g(n), gdot(n))``; vectorized over ``n``.

        Raises :class:`DomainError` for n < 0 or outside a tabulated range.
        """
        arr = np.asarray(n, dtype=float)
        if np.any(arr < 0.0):
            raise DomainError("friction profiles are defined for n >= 0")
        if self.kind == "constant":
            g = self.gamma * arr
            gdot = np.full_like(arr, self.gamma)
        else:
            if np.any(arr > self.n_max * (1.0 + 1e-12)):
                raise DomainError(
                    "n = %s outside tabulated friction range [0, %g]"
                    % (np.max(arr), self.n_max))
            arr = np.minimum(arr, self.n_max)
            g = self._interp(arr)
            gdot = self._dinterp(arr)
        if np.isscalar(n) or (isinstance(n, np.ndarray) and n.ndim == 0):
            return float(g), float(gdot)
        return g, gdot

    def __repr__(self):
        if self.kind == "constant":
            return "FrictionProfile.constant(gamma=%g)" % self.gamma
        return "FrictionProfile.tabulated(<%d samples, n_max=%g>)" % (
            len(self._interp.x), self.n_max)


def eval_friction(profile, n):
    """Evaluate a friction profile: returns ``(g(n), gdot(n))``."""
    return profile.evaluate(n)


class OscillatorParams:
    """Damped-oscillator parameters: angular frequency plus a friction profile.

    ``omega`` is the angular frequency per round trip (it equals the cavity
    rotation angle theta under the parameter mapping).  For constant friction
    the reduced frequency ``Omega = sqrt(omega**2 - gamma**2/4)`` governs the
    underdamped closed forms; it requires ``gamma < 2 * omega``.
    """

    def __init__(self, omega, friction):
        omega = float(omega)
        if not math.isfinite(omega) or omega <= 0.0:
            raise ValidationError("omega must be finite and > 0, got %r" % omega)
        if not isinstance(friction, FrictionProfile):
            raise ValidationError("friction must be a FrictionProfile")
        self.omega = omega
        self.friction = friction

    @property
    def gamma(self):
        """Constant friction rate, or None for tabulated profiles."""
        return self.friction.gamma

    @property
    def reduced_frequency(self):
        """Omega = sqrt(omega^2 - gamma^2/4) for constant underdamped friction."""
        if self.friction.kind != "constant":
            raise ValidationError(
                "reduced frequency is defined only for constant friction")
        gamma = self.friction.gamma
        if gamma >= 2.0 * self.omega:
            raise UnsupportedRegimeError(
                "gamma = %g >= 2*omega = %g: not underdamped; use the "
                "numerical-ODE branch" % (gamma, 2.0 * self.omega))
        return math.sqrt(self.omega ** 2 - gamma ** 2 / 4.0)

    def __repr__(self):
        return "OscillatorParams(omega=%g, friction=%r)" % (self.omega, self.friction)


class _PiecewiseDense:
    """Chain of dense ODE solutions over contiguous segments."""

    def __init__(self, breaks, segments):
        self.breaks = np.asarray(breaks, dtype=float)
        self.segments = segments

    def __call__(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        idx = np.searchsorted(self.breaks, t, side="right") - 1
        idx = np.clip(idx, 0, len(self.segments) - 1)
        out = np.empty((4, t.size))
        for i in np.unique(idx):
            mask = idx == i
            out[:, mask] = self.segments[i](t[mask])
        return out


class ClassicalSolution:
    """Fundamental solutions u1, u2 of the damped oscillator and derivatives.

    ``kind`` is ``"closed_form"`` (constant underdamped friction) or
    ``"ode"`` (adaptive integration, any profile).  All evaluators are
    vectorized over ``n``; the ODE branch is restricted to the integrated
    window ``[0, n_max]``.
    """

    def __init__(self, params, kind, dense=None, n_max=math.inf):
        self.params = params
        self.kind = kind
        self._dense = dense
        self.n_max = n_max
        if kind == "closed_form":
            self._gamma = params.friction.gamma
            self._big_omega = params.reduced_frequency

    def _check_domain(self, arr):
        if np.any(arr < 0.0):
            raise DomainError("fundamental solutions are defined for n >= 0")
        if np.any(arr > self.n_max * (1.0 + 1e-12)):
            raise DomainError(
                "n = %s outside integrated range [0, %g]; re-integrate with a "
                "larger n_max" % (np.max(arr), self.n_max))

    def _eval(self, n, index):
        arr = np.asarray(n, dtype=float)
        self._check_domain(arr)
        if self.kind == "closed_form":
            gam, big = self._gamma, self._big_omega
            env = np.exp(-0.5 * gam * arr)
            s = np.sin(big * arr)
            c = np.cos(big * arr)
            if index == 0:
                out = env * s / big
            elif index == 1:
                out = env * (c - (0.5 * gam / big) * s)
            elif index == 2:
                out = env * (c + (0.5 * gam / big) * s)
            else:
                out = -(self.params.omega ** 2 / big) * env * s
        else:
            ys = self._dense(np.atleast_1d(arr))
            out = ys[index]
            if arr.ndim == 0:
                out = out[0]
        if np.isscalar(n) or (isinstance(n, np.ndarray) and n.ndim == 0):
            return float(out)
        return np.asarray(out)

    def u1(self, n):
        """Sine-like solution: u1(0) = 0, u1'(0) = 1."""
        return self._eval(n, 0)

    def du1(self, n):
        """Derivative of u1."""
        return self._eval(n, 1)

    def u2(self, n):
        """Cosine-like solution: u2(0) = 1, u2'(0) = 0."""
        return self._eval(n, 2)

    def du2(self, n):
        """Derivative of u2."""
        return self._eval(n, 3)

    def wronskian(self, n):
        """W(n) = u1' u2 - u2' u1; identically exp(-g(n))."""
        return self.du1(n) * self.u2(n) - self.du2(n) * self.u1(n)


def fundamental_solutions(params, method="auto", n_max=None,
                          rtol=ODE_RTOL, atol=ODE_ATOL):
    """Build the fundamental solutions u1, u2 for the given oscillator.

    Parameters
    ----------
    params : OscillatorParams
    method : {"auto", "closed_form", "ode"}
        "closed_form" requires constant friction with gamma < 2*omega and
        returns exact expressions; "ode" integrates the equation of motion
        with an adaptive high-order scheme; "auto" picks the closed form
        whenever it applies.
    n_max : float, optional
        Upper end of the integration window (ODE branch only).  Defaults to
        the tabulated friction range; required for constant friction on the
        ODE branch.
    rtol, atol : float
        ODE integrator tolerances (the defaults support windows up to
        n ~ 1e4).

    Returns
    -------
    ClassicalSolution
    """
    closed_ok = params.friction.kind == "constant" and \
        params.friction.gamma < 2.0 * params.omega
    if method == "auto":
        method = "closed_form" if closed_ok else "ode"
    if method == "closed_form":
        if params.friction.kind != "constant":
            raise ValidationError(
                "closed-form solutions require constant friction")
        if not closed_ok:
            raise UnsupportedRegimeError(
                "gamma = %g >= 2*omega = %g has no underdamped closed form; "
                "use method='ode'" % (params.friction.gamma, 2.0 * params.omega))
        return ClassicalSolution(params, "closed_form")
    if method != "ode":
        raise ValidationError("unknown method %r" % (method,))

    if n_max is None:
        if math.isfinite(params.friction.n_max):
            n_max = params.friction.n_max
        else:
            raise ValidationError(
                "n_max is required for the ODE branch with constant friction")
    n_max = float(n_max)
    if n_max <= 0.0:
        raise ValidationError("n_max must be positive")

    omega_sq = params.omega ** 2
    friction = params.friction

    def rhs(t, y):
        _, gdot = friction.evaluate(t)
        return [y[1], -gdot * y[1] - omega_sq * y[0],
                y[3], -gdot * y[3] - omega_sq * y[2]]

    # The monotone interpolant of a tabulated profile has curvature jumps at
    # the table nodes, which silently degrades a high-order integrator that
    # steps across them; restarting at each node keeps full accuracy.
    if friction.kind == "tabulated":
        nodes = friction.nodes
        interior = nodes[(nodes > 0.0) & (nodes < n_max)]
        breaks = np.concatenate(([0.0], interior, [n_max]))
    else:
        breaks = np.array([0.0, n_max])
    segments = []
    y0 = [0.0, 1.0, 1.0, 0.0]
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        result = solve_ivp(rhs, (lo, hi), y0, method="DOP853",
                           dense_output=True, rtol=rtol, atol=atol)
        if not result.success:
            raise ValidationError(
                "fundamental-solution integration failed: %s" % result.message)
        segments.append(result.sol)
        y0 = result.y[:, -1]
    dense = segments[0] if len(segments) == 1 else \
        _PiecewiseDense(breaks, segments)
    return ClassicalSolution(params, "ode", dense=dense, n_max=n_max)


def wronskian(sol, n):
    """Wronskian u1' u2 - u2' u1 of a ClassicalSolution at ``n``."""
    return sol.wronskian(n)
