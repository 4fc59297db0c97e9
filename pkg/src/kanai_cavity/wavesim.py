"""Wave-optics regime: diffraction round trips, beam parameters, collapse.

Three engines propagate the transverse field at the left mirror:

* ``fresnel`` -- the generalized diffraction integral of one round trip,
  evaluated by a chirp / discrete-transform / chirp decomposition.  The
  output grid spacing is ``lambda |b| / (N dx_in)``; since ``b`` shrinks
  along a damping schedule, the grid co-collapses with the field and the
  relative resolution stays constant.
* ``split_step`` -- symmetric operator splitting of the equivalent
  continuous-time equation
  ``i dpsi/dn = [b theta/(2k sin theta)] psi_xx + [k theta c/(2 sin theta)] x^2 psi``
  on a fixed grid.
* ``gaussian_q`` -- the complex beam parameter integrated through the
  continuum limit of the round-trip map (a fourth-order Magnus scheme on the
  2x2 flow), which resolves the adiabatic spot-size law far below the
  per-trip discretization floor.

Spot sizes are reported as twice the intensity standard deviation, which for
a fundamental Gaussian equals the 1/e^2 intensity radius.
"""

import json
import math
import os

import numpy as np

from ._formats import atomic_write_bytes, atomic_write_text, json_text
from .errors import (BeamParameterError, NearFocalPlaneError,
                     NearInstabilityError, ResolutionError, SamplingError,
                     ValidationError)
from .paraxial import AbcdMatrix
from .raysim import RayState, iterate_ray

#: Fraction of f below which |b| counts as "at a focal plane" for the kernel.
EPSILON_B = 1e-9
#: Default wavelength in units of f.
DEFAULT_WAVELENGTH = 1e-4
#: Default grid size (power of two).
DEFAULT_GRID_N = 4096
#: Default grid window in units of the initial spot size.
DEFAULT_WINDOW_FACTOR = 16.0
#: Default substeps per round trip of the split-step engine.
DEFAULT_SUBSTEPS = 8
#: Default Magnus step (fraction of a round trip) of the gaussian_q engine.
DEFAULT_Q_STEP = 0.125

_PLANE_TAGS = ("left_mirror", "right_mirror")


def centered_grid(n, dx):
    """Grid of n points spaced dx, centered so that index n//2 sits at 0."""
    return (np.arange(n) - n // 2) * dx


def _is_power_of_two(n):
    return n >= 2 and (n & (n - 1)) == 0


class ComplexField:
    """1-d complex field samples on a uniform transverse grid.

    ``x0`` is the coordinate of sample 0 (grids used by the engines are
    centered: x0 = -(N//2) dx).  ``plane_tag`` records which mirror plane
    the samples live on.
    """

    __slots__ = ("samples", "dx", "x0", "wavelength", "plane_tag")

    def __init__(self, samples, dx, x0, wavelength, plane_tag="left_mirror"):
        samples = np.asarray(samples, dtype=complex)
        if samples.ndim != 1 or not _is_power_of_two(samples.size):
            raise ValidationError(
                "field needs a 1-d sample array with power-of-two length; "
                "got shape %r" % (samples.shape,))
        dx = float(dx)
        wavelength = float(wavelength)
        if dx <= 0.0 or wavelength <= 0.0:
            raise ValidationError("dx and wavelength must be > 0")
        if plane_tag not in _PLANE_TAGS:
            raise ValidationError("plane_tag must be one of %r" % (_PLANE_TAGS,))
        if not np.all(np.isfinite(samples.view(float))):
            raise ValidationError("field samples must be finite")
        norm_sq = float(np.sum(np.abs(samples) ** 2)) * dx
        if not (norm_sq > 0.0 and math.isfinite(norm_sq)):
            raise ValidationError("field norm must be positive and finite")
        self.samples = samples
        self.dx = dx
        self.x0 = float(x0)
        self.wavelength = wavelength
        self.plane_tag = plane_tag

    @property
    def n_samples(self):
        return self.samples.size

    @property
    def grid(self):
        return self.x0 + np.arange(self.samples.size) * self.dx

    @property
    def k(self):
        return 2.0 * math.pi / self.wavelength

    def norm_sq(self):
        """Integral of |psi|^2 dx."""
        return float(np.sum(np.abs(self.samples) ** 2)) * self.dx

    def centroid(self):
        """Intensity-weighted mean position."""
        intens = np.abs(self.samples) ** 2
        return float(np.sum(intens * self.grid) / np.sum(intens))

    def with_samples(self, samples):
        return ComplexField(samples, self.dx, self.x0, self.wavelength,
                            self.plane_tag)

    def is_centered(self):
        return abs(self.x0 + (self.n_samples // 2) * self.dx) <= 1e-9 * self.dx


def _require_centered(field):
    if not field.is_centered():
        raise ValidationError(
            "engine requires a centered grid (x0 = -(N//2) dx)")


class GaussianBeam:
    """Fundamental Gaussian beam: complex parameter q plus displacements.

    ``q`` must have positive imaginary part (confined beam); ``center`` and
    ``tilt`` displace the beam in position and angle, and ``amplitude``
    scales its norm.
    """

    __slots__ = ("q", "amplitude", "center", "tilt")

    def __init__(self, q, amplitude=1.0, center=0.0, tilt=0.0):
        q = complex(q)
        if not (q.imag > 0.0):
            raise ValidationError(
                "beam parameter must have Im(q) > 0, got %r" % (q,))
        self.q = q
        self.amplitude = float(amplitude)
        self.center = float(center)
        self.tilt = float(tilt)

    def spot_size(self, wavelength):
        """1/e^2 intensity radius w with w^2 = lambda |q|^2 / (pi Im q)."""
        return math.sqrt(wavelength * abs(self.q) ** 2 / (math.pi * self.q.imag))

    def __repr__(self):
        return "GaussianBeam(q=%r, amplitude=%r, center=%r, tilt=%r)" % (
            self.q, self.amplitude, self.center, self.tilt)


def eigenmode_beam(m):
    """Self-reproducing Gaussian of a stable canonical matrix: q = i sqrt(-b/c)."""
    from .paraxial import stability
    info = stability(m)
    if not info.stable or info.marginal:
        raise ValidationError("eigenmode requires a strictly stable matrix")
    ratio = -m.b / m.c
    if ratio <= 0.0:
        raise ValidationError("eigenmode requires b/c < 0")
    return GaussianBeam(1j * math.sqrt(ratio))


def sample_beam(beam, wavelength, n_samples=DEFAULT_GRID_N, dx=None,
                window_factor=DEFAULT_WINDOW_FACTOR, plane_tag="left_mirror"):
    """Sample a Gaussian beam on a centered grid.

    When ``dx`` is omitted the grid window is ``window_factor`` times the
    beam spot size.  The samples are normalized so the field norm equals the
    beam amplitude.
    """
    n_samples = int(n_samples)
    if not _is_power_of_two(n_samples):
        raise ValidationError("n_samples must be a power of two >= 2")
    w = beam.spot_size(wavelength)
    if dx is None:
        dx = window_factor * w / n_samples
    x = centered_grid(n_samples, dx)
    k = 2.0 * math.pi / wavelength
    psi = np.exp(-1j * math.pi * (x - beam.center) ** 2 / (wavelength * beam.q)
                 - 1j * k * beam.tilt * x)
    psi *= beam.amplitude / math.sqrt(float(np.sum(np.abs(psi) ** 2)) * dx)
    return ComplexField(psi, dx, x[0], wavelength, plane_tag)


def spot_size(field):
    """Spot size w = 2 sqrt(<x^2> - <x>^2) from the intensity profile."""
    intens = np.abs(field.samples) ** 2
    total = float(np.sum(intens))
    if total <= 0.0:
        raise ValidationError("field carries no power")
    if int(np.count_nonzero(intens > 1e-12 * intens.max())) < 2:
        raise ResolutionError(
            "field support has degenerated to a single grid pixel")
    x = field.grid
    mean = float(np.sum(intens * x) / total)
    var = float(np.sum(intens * (x - mean) ** 2) / total)
    return 2.0 * math.sqrt(max(var, 0.0))


def inner_product(f1, f2):
    """<f1, f2> = integral conj(f1) f2 dx; the grids must coincide."""
    if f1.n_samples != f2.n_samples:
        raise ValidationError("fields have different sample counts")
    if abs(f1.dx - f2.dx) > 1e-12 * f1.dx or abs(f1.x0 - f2.x0) > 1e-9 * f1.dx:
        raise ValidationError("fields live on different grids")
    return complex(np.vdot(f1.samples, f2.samples)) * f1.dx


def overlap(f1, f2):
    """Normalized modulus of the inner product, in [0, 1]."""
    ip = abs(inner_product(f1, f2))
    return ip / math.sqrt(f1.norm_sq() * f2.norm_sq())


def phase_aligned_l2(f1, f2):
    """Relative L2 distance after optimizing a single global phase.

    Returns min over phi of ||f1 - e^{i phi} f2|| / ||f1||.
    """
    n1 = f1.norm_sq()
    n2 = f2.norm_sq()
    ip = abs(inner_product(f1, f2))
    return math.sqrt(max(n1 + n2 - 2.0 * ip, 0.0) / n1)


def save_field_snapshot(field, path, n=0):
    """Write samples as little-endian interleaved (re, im) float64 + sidecar.

    The JSON sidecar (same path with ``.json`` appended) records the grid
    metadata {n, dx, x0, wavelength, plane_tag, count}.
    """
    arr = np.empty(2 * field.n_samples, dtype="<f8")
    arr[0::2] = field.samples.real
    arr[1::2] = field.samples.imag
    atomic_write_bytes(path, arr.tobytes())
    sidecar = {"n": int(n), "dx": field.dx, "x0": field.x0,
               "wavelength": field.wavelength, "plane_tag": field.plane_tag,
               "count": field.n_samples}
    atomic_write_text(str(path) + ".json", json_text(sidecar))


def load_field_snapshot(path):
    """Read a snapshot written by :func:`save_field_snapshot`.

    Returns ``(field, n)``.
    """
    with open(str(path) + ".json", "r", encoding="utf-8") as handle:
        meta = json.load(handle)
    count = int(meta["count"])
    arr = np.fromfile(path, dtype="<f8")
    if arr.size != 2 * count:
        raise ValidationError(
            "snapshot %s holds %d values, sidecar expects %d"
            % (path, arr.size, 2 * count))
    samples = arr[0::2] + 1j * arr[1::2]
    field = ComplexField(samples, float(meta["dx"]), float(meta["x0"]),
                         float(meta["wavelength"]), str(meta["plane_tag"]))
    return field, int(meta["n"])


def _check_chirp_sampling(field, a_elem, b_elem):
    """Detect chirp aliasing before a diffraction step.

    Estimates the highest instantaneous spatial frequency the pre-chirped
    field reaches -- kernel chirp rate |a| x / (lambda |b|) at the edge of
    the energy-carrying support, plus the field's own spectral extent -- and
    raises :class:`SamplingError` with a suggested grid size when it exceeds
    95% of the grid Nyquist frequency.
    """
    lam = field.wavelength
    dx = field.dx
    n = field.n_samples
    intens = np.abs(field.samples) ** 2
    peak = intens.max()
    mask = intens >= 1e-12 * peak
    x = field.grid
    total = float(np.sum(intens))
    x_mean = float(np.sum(intens * x) / total)
    x_edge = float(np.max(np.abs(x[mask] - x_mean))) + abs(x_mean)

    spectrum = np.fft.fft(np.fft.ifftshift(field.samples))
    power = np.abs(spectrum) ** 2
    power /= power.sum()
    nu = np.fft.fftfreq(n, dx)
    nu_mean = float(np.sum(power * nu))
    nu_std = math.sqrt(max(float(np.sum(power * (nu - nu_mean) ** 2)), 0.0))

    nu_kernel = abs(a_elem) * x_edge / (lam * abs(b_elem))
    nu_needed = nu_kernel + abs(nu_mean) + 5.0 * nu_std
    nu_nyquist = 0.5 / dx
    if nu_needed > 0.95 * nu_nyquist:
        factor = nu_needed / (0.95 * nu_nyquist)
        suggested = 1 << int(math.ceil(math.log2(n * factor)))
        raise SamplingError(
            "chirped field reaches %.3g cycles per unit length but the grid "
            "resolves only %.3g; resample with at least N = %d"
            % (nu_needed, nu_nyquist, suggested), suggested_n=suggested)


def fresnel_round_trip(field, m, eps_b=EPSILON_B, plane_tag=None,
                       check_sampling=True):
    """Apply the generalized diffraction integral of a ray matrix.

    Implements

        psi_out(x) = sqrt(i/(lambda b)) *
            integral exp[-i pi (a xi^2 + d x^2 - 2 x xi)/(lambda b)] psi(xi) dxi

    by pre-chirp, discrete Fourier transform, and post-chirp.  The output is
    returned on the natural grid of the transform, spacing
    ``lambda |b| / (N dx_in)`` -- it is not resampled, so along a damping
    schedule the grid contracts together with the field.

    Raises :class:`NearFocalPlaneError` for |b| <= eps_b (the kernel is
    singular at b = 0) and :class:`SamplingError` when the chirp would alias.
    """
    _require_centered(field)
    a_el, b_el, d_el = m.a, m.b, m.d
    if abs(b_el) <= eps_b:
        raise NearFocalPlaneError(
            "|b| = %g <= %g: reference plane too close to a focal plane "
            "for the diffraction kernel" % (abs(b_el), eps_b))
    if check_sampling:
        _check_chirp_sampling(field, a_el, b_el)
    lam = field.wavelength
    n = field.n_samples
    dx_in = field.dx
    x_in = field.grid
    dx_out = lam * abs(b_el) / (n * dx_in)
    x_out = centered_grid(n, dx_out)

    pre = np.exp(-1j * math.pi * a_el * x_in ** 2 / (lam * b_el)) * field.samples
    if b_el < 0.0:
        spectrum = np.fft.fftshift(np.fft.fft(np.fft.ifftshift(pre)))
        amp = np.sqrt(-1j / (lam * abs(b_el)))
    else:
        spectrum = np.fft.fftshift(np.fft.ifft(np.fft.ifftshift(pre))) * n
        amp = np.sqrt(1j / (lam * b_el))
    post = np.exp(-1j * math.pi * d_el * x_out ** 2 / (lam * b_el))
    out = amp * dx_in * post * spectrum
    return ComplexField(out, dx_out, x_out[0], lam,
                        plane_tag or field.plane_tag)


#: Stage weights of the 5-stage Suzuki fractal composition.  Sandwiching
#: kick-drift-kick substeps with these weights cancels the second- and
#: third-order splitting errors, leaving a fourth-order method; each weight
#: multiplies the substep length (the middle one is negative).
_SUZUKI_W1 = 1.0 / (4.0 - 4.0 ** (1.0 / 3.0))
_SUZUKI_STAGES = (_SUZUKI_W1, _SUZUKI_W1, 1.0 - 4.0 * _SUZUKI_W1,
                  _SUZUKI_W1, _SUZUKI_W1)


def split_step_round_trip(field, theta, b, c, k, substeps=DEFAULT_SUBSTEPS):
    """One round trip of the continuous-time equation by symmetric splitting.

    Integrates i dpsi/dn = [b theta/(2 k sin theta)] psi_xx
    + [k theta c /(2 sin theta)] x^2 psi over one trip on the field's own
    (fixed) grid.  Each of the ``substeps`` substeps is a five-stage Suzuki
    composition of kick-drift-kick stages, giving a per-trip error that
    scales as (theta / substeps)^4 while every stage stays exactly unitary.
    """
    _require_centered(field)
    substeps = int(substeps)
    if substeps < 1:
        raise ValidationError("substeps must be >= 1")
    sin_theta = math.sin(theta)
    if abs(sin_theta) < 1e-9:
        raise NearInstabilityError(
            "sin(theta) = %g: matrix too close to marginal stability for "
            "the continuous-time coefficients" % sin_theta)
    x = field.grid
    kappa = 2.0 * math.pi * np.fft.fftfreq(field.n_samples, field.dx)
    c_kin = b * theta / (2.0 * k * sin_theta)
    c_pot = k * theta * c / (2.0 * sin_theta)
    dt = 1.0 / substeps
    half_kicks = [np.exp(-1j * c_pot * (w * dt / 2.0) * x ** 2)
                  for w in _SUZUKI_STAGES]
    drifts = [np.exp(1j * c_kin * w * dt * kappa ** 2)
              for w in _SUZUKI_STAGES]
    out = field.samples
    for _ in range(substeps):
        for half_kick, drift in zip(half_kicks, drifts):
            out = half_kick * out
            out = np.fft.fftshift(
                np.fft.ifft(np.fft.fft(np.fft.ifftshift(out)) * drift))
            out = half_kick * out
    return field.with_samples(out)


def beam_round_trip(q, m):
    """Per-trip bilinear beam-parameter map q -> (a q + b)/(c q + d)."""
    denom = m.c * q + m.d
    if abs(denom) < 1e-12:
        raise BeamParameterError(
            "beam-parameter map singular: c q + d = %r" % (denom,))
    return (m.a * q + m.b) / denom


def _spot_from_q(q, wavelength):
    if q.imag <= 0.0:
        raise BeamParameterError("beam parameter left the upper half plane")
    return math.sqrt(wavelength * abs(q) ** 2 / (math.pi * q.imag))


class GaussianQTrace:
    """Beam parameters and spot sizes on both mirrors, per round trip."""

    def __init__(self, n, q_left, q_right, w1, w2):
        self.n = np.asarray(n)
        self.q_left = np.asarray(q_left)
        self.q_right = np.asarray(q_right)
        self.w1 = np.asarray(w1, dtype=float)
        self.w2 = np.asarray(w2, dtype=float)


def _flow_trace(q0, b0, c0, kk, friction, n_max, steps, sign):
    """Integrate the 2x2 continuum flow and record q at integer trips.

    The generator is (theta/sin theta) [[0, b(n)], [c(n), 0]] with
    b(n) = b0 e^{-g}, c(n) = c0 e^{+g} (sign=+1, left mirror) or
    b(n) = b0 e^{+g}, c(n) = c0 e^{-g} (sign=-1, right mirror).  One Magnus
    step per node pair keeps the map symplectic to fourth order in the step.
    """
    h = 1.0 / steps
    total = n_max * steps
    offset = math.sqrt(3.0) / 6.0
    base = np.arange(total) * h
    nodes1 = base + (0.5 - offset) * h
    nodes2 = base + (0.5 + offset) * h
    if total:
        g1 = friction.evaluate(nodes1)[0]
        g2 = friction.evaluate(nodes2)[0]
    else:
        g1 = g2 = np.empty(0)
    b_node1 = (b0 * np.exp(-sign * g1)).tolist()
    c_node1 = (c0 * np.exp(sign * g1)).tolist()
    b_node2 = (b0 * np.exp(-sign * g2)).tolist()
    c_node2 = (c0 * np.exp(sign * g2)).tolist()

    commutator_scale = math.sqrt(3.0) * h * h / 12.0 * kk * kk
    half_h = 0.5 * h * kk
    p11, p12, p21, p22 = 1.0, 0.0, 0.0, 1.0
    qs = [q0]
    for i in range(total):
        b1, c1 = b_node1[i], c_node1[i]
        b2, c2 = b_node2[i], c_node2[i]
        a = commutator_scale * (b2 * c1 - b1 * c2)
        bb = half_h * (b1 + b2)
        cc = half_h * (c1 + c2)
        s_sq = a * a + bb * cc
        if s_sq >= 0.0:
            s = math.sqrt(s_sq)
            ch = math.cosh(s)
            shs = math.sinh(s) / s if s > 1e-8 else 1.0 + s_sq / 6.0
        else:
            s = math.sqrt(-s_sq)
            ch = math.cos(s)
            shs = math.sin(s) / s if s > 1e-8 else 1.0 + s_sq / 6.0
        e11 = ch + a * shs
        e12 = bb * shs
        e21 = cc * shs
        e22 = ch - a * shs
        p11, p12, p21, p22 = (e11 * p11 + e12 * p21, e11 * p12 + e12 * p22,
                              e21 * p11 + e22 * p21, e21 * p12 + e22 * p22)
        if (i + 1) % steps == 0:
            denom = p21 * q0 + p22
            if abs(denom) < 1e-12:
                raise BeamParameterError(
                    "beam-parameter flow singular at trip %d" % ((i + 1) // steps))
            qs.append((p11 * q0 + p12) / denom)
    return qs


def gaussian_q_trace(sched, q0, n_max, wavelength=DEFAULT_WAVELENGTH,
                     step=DEFAULT_Q_STEP):
    """Track the complex beam parameter on both mirrors along a schedule.

    The left-mirror parameter starts at ``q0``; the right-mirror parameter
    starts at the half-trip image of ``q0`` and evolves under the
    right-mirror round-trip elements.  Spot sizes are derived from q at each
    integer trip.  ``step`` is the Magnus integration step in round trips
    (must divide 1).
    """
    q0 = complex(q0)
    if not (q0.imag > 0.0):
        raise ValidationError("q0 must have positive imaginary part")
    n_max = int(n_max)
    if n_max < 0:
        raise ValidationError("n_max must be >= 0")
    steps = int(round(1.0 / step))
    if steps < 1 or abs(steps * step - 1.0) > 1e-9:
        raise ValidationError("step must divide one round trip")
    kk = sched.theta / math.sin(sched.theta)
    q_right0 = beam_round_trip(q0, sched.half_matrix_at(0.0))
    q_left = _flow_trace(q0, sched.b0, sched.c0, kk,
                         sched.friction, n_max, steps, +1.0)
    q_right = _flow_trace(q_right0, sched.right_b0, sched.right_c0, kk,
                          sched.friction, n_max, steps, -1.0)
    w1 = [_spot_from_q(q, wavelength) for q in q_left]
    w2 = [_spot_from_q(q, wavelength) for q in q_right]
    return GaussianQTrace(np.arange(n_max + 1), q_left, q_right, w1, w2)


class CollapseTrace:
    """Per-round-trip collapse diagnostics.

    ``diagnostic`` is None for a complete run; a truncated run keeps the
    samples collected so far and carries the reason here.
    """

    def __init__(self, n, w1, w2, norm, centroid, engine, diagnostic=None):
        self.n = np.asarray(n)
        self.w1 = np.asarray(w1, dtype=float)
        self.w2 = np.asarray(w2, dtype=float)
        self.norm = np.asarray(norm, dtype=float)
        self.centroid = np.asarray(centroid, dtype=float)
        self.engine = engine
        self.diagnostic = diagnostic

    @property
    def truncated(self):
        return self.diagnostic is not None

    def rows(self):
        """Yield CSV rows (n, w1, w2, norm, centroid_x)."""
        for i in range(self.n.size):
            yield (int(self.n[i]), self.w1[i], self.w2[i],
                   self.norm[i], self.centroid[i])


def _centroid_ray(sched, beam, n_max):
    if beam.center == 0.0 and beam.tilt == 0.0:
        return np.zeros(n_max + 1)
    if n_max == 0:
        return np.array([beam.center])
    trace = iterate_ray(sched, RayState(beam.center, beam.tilt), n_max)
    return trace.x


def run_collapse(sched, initial, n_max, engine="fresnel",
                 wavelength=None, grid_n=DEFAULT_GRID_N,
                 window_factor=DEFAULT_WINDOW_FACTOR,
                 substeps=DEFAULT_SUBSTEPS, q_step=DEFAULT_Q_STEP):
    """Propagate an initial beam or field along a schedule and log collapse.

    Parameters
    ----------
    sched : MirrorSchedule
    initial : GaussianBeam or ComplexField
        The gaussian_q engine requires a GaussianBeam; the grid engines
        accept either (a beam is sampled on a centered grid spanning
        ``window_factor`` spot sizes).
    n_max : int
    engine : {"fresnel", "split_step", "gaussian_q"}
    wavelength : float
        Required when ``initial`` is a beam; a field carries its own.

    Returns
    -------
    CollapseTrace
        Truncated early (with ``diagnostic`` set) if the fresnel grid can no
        longer resolve the chirp or the split-step spot falls below eight
        grid pixels.
    """
    n_max = int(n_max)
    if n_max < 0:
        raise ValidationError("n_max must be >= 0")
    if engine == "gaussian_q":
        if not isinstance(initial, GaussianBeam):
            raise ValidationError(
                "the gaussian_q engine needs a GaussianBeam initial state")
        if wavelength is None:
            raise ValidationError("wavelength is required with a beam input")
        qtrace = gaussian_q_trace(sched, initial.q, n_max, wavelength,
                                  step=q_step)
        centroid = _centroid_ray(sched, initial, n_max)
        norm = np.full(n_max + 1, initial.amplitude ** 2)
        return CollapseTrace(qtrace.n, qtrace.w1, qtrace.w2, norm, centroid,
                             engine)
    if engine not in ("fresnel", "split_step"):
        raise ValidationError("unknown engine %r" % (engine,))

    if isinstance(initial, GaussianBeam):
        if wavelength is None:
            raise ValidationError("wavelength is required with a beam input")
        field = sample_beam(initial, wavelength, grid_n,
                            window_factor=window_factor)
    elif isinstance(initial, ComplexField):
        field = initial
    else:
        raise ValidationError("initial must be a GaussianBeam or ComplexField")

    k = field.k
    theta = sched.theta
    starts = np.arange(max(n_max, 1), dtype=float)
    a_arr, b_arr, c_arr = sched.elements_at(starts)
    ns, w1s, w2s, norms, centroids = [], [], [], [], []
    diagnostic = None
    for n in range(n_max + 1):
        try:
            w1 = spot_size(field)
            right = fresnel_round_trip(field, sched.half_matrix_at(float(n)),
                                       plane_tag="right_mirror")
            w2 = spot_size(right)
        except (SamplingError, ResolutionError) as exc:
            diagnostic = "run truncated at trip %d: %s" % (n, exc)
            break
        ns.append(n)
        w1s.append(w1)
        w2s.append(w2)
        norms.append(field.norm_sq())
        centroids.append(field.centroid())
        if engine == "split_step" and w1 < 8.0 * field.dx:
            diagnostic = ("run truncated at trip %d: spot size %g below "
                          "eight grid pixels (%g)" % (n, w1, 8.0 * field.dx))
            break
        if n == n_max:
            break
        try:
            if engine == "fresnel":
                m = AbcdMatrix(a_arr[n], b_arr[n], c_arr[n], a_arr[n])
                field = fresnel_round_trip(field, m)
            else:
                field = split_step_round_trip(field, theta, b_arr[n],
                                              c_arr[n], k, substeps)
        except SamplingError as exc:
            diagnostic = "run truncated at trip %d: %s" % (n + 1, exc)
            break
    return CollapseTrace(np.array(ns), w1s, w2s, norms, centroids, engine,
                         diagnostic)
