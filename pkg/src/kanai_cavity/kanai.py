"""Exact quantum side: damped-oscillator propagator and the cavity mapping.

The damped harmonic oscillator

    i hbar dpsi/dt = -(hbar^2 / 2m) e^{-g(t)} psi_xx
                     + (m omega^2 / 2) e^{+g(t)} x^2 psi

is solved exactly by rescaling a free-particle solution phi:

    psi(x, t) = u2^{-1/2} exp[ i m u2' x^2 / (2 hbar W u2) ] phi(x/u2, u1/u2)

where (u1, u2) are the classical fundamental solutions, W = u2' u1 - ...
their damped Wronskian e^{-g}, and phi solves i hbar phi_T = -(hbar^2/2m)
phi_XX.  The cavity realizes the same equation with

    hbar_eff = 1/k,   m_eff = (1/theta) sqrt(-c(0)/b(0)),   omega = theta,

and t measured in round trips, which this module makes available as a
parameter map plus a three-way engine cross-check (analytic propagator,
diffraction round trips, ray trace).
"""

import math

import numpy as np

from .core import OscillatorParams, fundamental_solutions
from .errors import MappingError, NearCausticError, ValidationError
from .paraxial import AbcdMatrix, round_trip_matrix, stability
from .raysim import RayState, iterate_ray
from .wavesim import (ComplexField, GaussianBeam, fresnel_round_trip,
                      phase_aligned_l2, sample_beam, spot_size)


class QuantumParams:
    """Effective quantum constants realized by a cavity geometry."""

    __slots__ = ("hbar_eff", "mass_eff", "omega")

    def __init__(self, hbar_eff, mass_eff, omega):
        if hbar_eff <= 0.0 or mass_eff <= 0.0 or omega <= 0.0:
            raise ValidationError("hbar_eff, mass_eff, omega must be > 0")
        self.hbar_eff = float(hbar_eff)
        self.mass_eff = float(mass_eff)
        self.omega = float(omega)

    def __repr__(self):
        return "QuantumParams(hbar_eff=%r, mass_eff=%r, omega=%r)" % (
            self.hbar_eff, self.mass_eff, self.omega)


def map_parameters(geom0, wavelength):
    """Map a stable geometry and wavelength to effective quantum constants.

    hbar_eff = 1/k = wavelength / (2 pi); the effective mass comes from the
    round-trip elements at the left mirror, m = (1/theta) sqrt(-c/b), which
    is positive strictly inside the stability domain (b c = a^2 - 1 < 0 with
    b < 0 in the supported domain).
    """
    m = round_trip_matrix(geom0)
    info = stability(m)
    if not info.stable or info.marginal:
        raise MappingError(
            "parameter map needs a strictly stable geometry; "
            "a = %g" % info.a)
    if not (m.b < 0.0 and m.c > 0.0):
        raise MappingError(
            "parameter map supports the b < 0 stability domain only; "
            "b = %g, c = %g" % (m.b, m.c))
    hbar_eff = wavelength / (2.0 * math.pi)
    mass_eff = math.sqrt(-m.c / m.b) / info.theta
    return QuantumParams(hbar_eff, mass_eff, info.theta)


class GaussianWavepacket:
    """Normalized free Gaussian initial condition.

    ``width`` is the position standard deviation at T = 0, ``center`` and
    ``momentum`` the initial first moments.
    """

    __slots__ = ("width", "center", "momentum")

    def __init__(self, width, center=0.0, momentum=0.0):
        width = float(width)
        if width <= 0.0:
            raise ValidationError("width must be > 0")
        self.width = width
        self.center = float(center)
        self.momentum = float(momentum)


def free_gaussian(packet, x, t, hbar, mass):
    """Closed-form spreading Gaussian solving i hbar phi_t = -(hbar^2/2m) phi_xx.

    Moments: center(t) = center + momentum t / m and
    width(t)^2 = width^2 + (hbar t / (2 m width))^2.  Normalized for all t.
    """
    x = np.asarray(x, dtype=float)
    sigma = packet.width
    spread = 1.0 + 1j * hbar * t / (2.0 * mass * sigma * sigma)
    x_c = packet.center + packet.momentum * t / mass
    norm = (2.0 * math.pi * sigma * sigma) ** (-0.25)
    phase = (packet.momentum * x / hbar
             - packet.momentum ** 2 * t / (2.0 * mass * hbar))
    return (norm / np.sqrt(spread)
            * np.exp(-(x - x_c) ** 2 / (4.0 * sigma * sigma * spread)
                     + 1j * phase))


def _solution_at(sol, n):
    u1 = sol.u1(n)
    u2 = sol.u2(n)
    du2 = sol.du2(n)
    g, _ = sol.params.friction.evaluate(n)
    return u1, u2, du2, np.exp(-g)


def kanai_propagate(packet, sol, params, x, n):
    """Evaluate the exact damped-oscillator wavefunction at trip n on a grid.

    ``x`` must be a uniform grid with power-of-two length (the result is a
    :class:`ComplexField` whose wavelength encodes hbar_eff = 1/k).  Norm is
    preserved for any n; near a caustic (|u2| <= 1e-12) the prefactor
    diverges and :class:`NearCausticError` is raised.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValidationError("x must be a 1-d grid with >= 2 points")
    dx = x[1] - x[0]
    if dx <= 0.0 or np.max(np.abs(np.diff(x) - dx)) > 1e-9 * dx:
        raise ValidationError("x must be uniformly increasing")
    n = float(n)
    u1, u2, du2, w_ronskian = (float(v) for v in _solution_at(sol, n))
    if abs(u2) <= 1e-12:
        raise NearCausticError(
            "caustic at n = %g: |u2| = %g" % (n, abs(u2)))
    hbar = params.hbar_eff
    mass = params.mass_eff
    prefactor = (u2 + 0j) ** (-0.5)
    chirp = np.exp(1j * mass * du2 * x ** 2 / (2.0 * hbar * w_ronskian * u2))
    phi = free_gaussian(packet, x / u2, u1 / u2, hbar, mass)
    samples = prefactor * chirp * phi
    return ComplexField(samples, dx, float(x[0]), 2.0 * math.pi * hbar,
                        "left_mirror")


def moments(packet, sol, params, n):
    """Mean position and width of the damped-oscillator state at trip n.

    Returns ``(x_mean, delta_x)`` with
    x_mean = center u2 + (momentum/m) u1 and
    delta_x = sqrt( (u2 width)^2 + (hbar u1 / (2 m width))^2 ),
    both vectorized over n.
    """
    n = np.asarray(n, dtype=float)
    u1 = np.asarray(sol.u1(n))
    u2 = np.asarray(sol.u2(n))
    x_mean = packet.center * u2 + packet.momentum * u1 / params.mass_eff
    sigma = packet.width
    delta_x = np.sqrt((u2 * sigma) ** 2
                      + (params.hbar_eff * u1
                         / (2.0 * params.mass_eff * sigma)) ** 2)
    if n.ndim == 0:
        return float(x_mean), float(delta_x)
    return x_mean, delta_x


def cavity_equation_coefficients(b0, c0, theta, k, g):
    """Kinetic and potential coefficients of the continuous-time cavity equation.

    i dpsi/dn = kin psi_xx + pot x^2 psi with kin = theta b(n)/(2 k sin theta)
    and pot = k theta c(n)/(2 sin theta), where b(n) = b0 e^{-g},
    c(n) = c0 e^{+g}.
    """
    sin_theta = math.sin(theta)
    kin = theta * b0 * math.exp(-g) / (2.0 * k * sin_theta)
    pot = k * theta * c0 * math.exp(g) / (2.0 * sin_theta)
    return kin, pot


def quantum_equation_coefficients(params, g):
    """The same coefficients from the quantum constants.

    kin = -(hbar/2m) e^{-g} and pot = (m omega^2 / 2 hbar) e^{+g}; equality
    with :func:`cavity_equation_coefficients` is the content of the
    parameter map (it reduces to b0 c0 = a^2 - 1 = -sin^2 theta).
    """
    kin = -params.hbar_eff * math.exp(-g) / (2.0 * params.mass_eff)
    pot = (params.mass_eff * params.omega ** 2 * math.exp(g)
           / (2.0 * params.hbar_eff))
    return kin, pot


def crosscheck_engines(geom0, wavelength, sched, n_max, center=0.0, tilt=0.0,
                       width_scale=1.0, grid_n=4096, window_factor=16.0):
    """Propagate one Gaussian through the analytic and diffraction engines.

    The initial state is the cavity eigenmode (optionally width-scaled,
    displaced by ``center`` and tilted by ``tilt``); the mapped wavepacket
    starts with the matching width sigma = w/2, the same center, and
    momentum = -tilt.  For each trip the report records the phase-aligned
    relative L2 distance between the fields plus both engines' centroids and
    widths (sigma convention).

    Returns a list of dicts
    {n, l2_distance, centroid_wave, centroid_analytic, width_wave,
    width_analytic}.
    """
    n_max = int(n_max)
    if n_max < 0:
        raise ValidationError("n_max must be >= 0")
    params = map_parameters(geom0, wavelength)
    m0 = round_trip_matrix(geom0)
    q0 = 1j * width_scale ** 2 * math.sqrt(-m0.b / m0.c)
    beam = GaussianBeam(q0, center=center, tilt=tilt)
    packet = GaussianWavepacket(beam.spot_size(wavelength) / 2.0,
                                center=center, momentum=-tilt)
    sol = fundamental_solutions(
        OscillatorParams(params.omega, sched.friction), n_max=n_max)

    field = sample_beam(beam, wavelength, grid_n, window_factor=window_factor)
    starts = np.arange(max(n_max, 1), dtype=float)
    a_arr, b_arr, c_arr = sched.elements_at(starts)
    records = []
    for n in range(n_max + 1):
        analytic = kanai_propagate(packet, sol, params, field.grid, float(n))
        x_mean, delta_x = moments(packet, sol, params, float(n))
        records.append({
            "n": n,
            "l2_distance": phase_aligned_l2(analytic, field),
            "centroid_wave": field.centroid(),
            "centroid_analytic": x_mean,
            "width_wave": spot_size(field) / 2.0,
            "width_analytic": delta_x,
        })
        if n == n_max:
            break
        m = AbcdMatrix(a_arr[n], b_arr[n], c_arr[n], a_arr[n])
        field = fresnel_round_trip(field, m)
    return records


def crosscheck_ray_centroid(sched, center, tilt, n_max):
    """Reference centroid from the ray engine for a displaced beam."""
    if n_max == 0:
        return np.array([float(center)])
    trace = iterate_ray(sched, RayState(center, tilt), int(n_max))
    return trace.x
