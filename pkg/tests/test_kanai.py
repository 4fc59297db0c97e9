"""Tests for the exact quantum side and the cavity-quantum mapping."""

import math

import numpy as np
import pytest

from kanai_cavity.core import FrictionProfile, OscillatorParams, fundamental_solutions
from kanai_cavity.errors import MappingError, NearCausticError, ValidationError
from kanai_cavity.kanai import (
    GaussianWavepacket,
    QuantumParams,
    cavity_equation_coefficients,
    crosscheck_engines,
    crosscheck_ray_centroid,
    free_gaussian,
    kanai_propagate,
    map_parameters,
    moments,
    quantum_equation_coefficients,
)
from kanai_cavity.paraxial import ResonatorGeometry, round_trip_matrix, stability
from kanai_cavity.schedule import MirrorSchedule
from kanai_cavity.wavesim import eigenmode_beam

GEOM0 = ResonatorGeometry(1.7, 1.5)
THETA = stability(round_trip_matrix(GEOM0)).theta
WAVELENGTH = 1e-4
PARAMS = map_parameters(GEOM0, WAVELENGTH)
SPOT0 = eigenmode_beam(round_trip_matrix(GEOM0)).spot_size(WAVELENGTH)


def propagator_grid(n_samples=2048, halfwidth=8.0 * SPOT0):
    dx = 2.0 * halfwidth / n_samples
    return (np.arange(n_samples) - n_samples // 2) * dx


# ---------------------------------------------------------------------------
# parameter mapping


def test_mapped_parameter_values():
    assert abs(PARAMS.hbar_eff - WAVELENGTH / (2.0 * math.pi)) < 1e-18
    assert abs(PARAMS.omega - THETA) < 1e-15
    # m = (1/theta) sqrt(-C/B) with B = -0.91, C = 1
    expected_mass = math.sqrt(1.0 / 0.91) / THETA
    assert abs(PARAMS.mass_eff - expected_mass) < 1e-12
    assert abs(PARAMS.mass_eff - 0.559) < 1e-3
    # hbar * k = 1 identically
    assert abs(PARAMS.hbar_eff * (2.0 * math.pi / WAVELENGTH) - 1.0) < 1e-15


def test_mapping_consistency_identity():
    # the same mass from the two algebraic routes: -sin(theta)/(theta B) and
    # (1/theta) sqrt(-C/B); they agree because B C = A^2 - 1 = -sin^2(theta)
    m = round_trip_matrix(GEOM0)
    mass_from_b = -math.sin(THETA) / (THETA * m.b)
    assert abs(mass_from_b / PARAMS.mass_eff - 1.0) < 1e-12


def test_equation_coefficients_match():
    m = round_trip_matrix(GEOM0)
    k = 2.0 * math.pi / WAVELENGTH
    for g in (0.0, 0.5, 1.3):
        kin_c, pot_c = cavity_equation_coefficients(m.b, m.c, THETA, k, g)
        kin_q, pot_q = quantum_equation_coefficients(PARAMS, g)
        assert abs(kin_c / kin_q - 1.0) < 1e-12
        assert abs(pot_c / pot_q - 1.0) < 1e-12


def test_mapping_rejects_bad_geometries():
    with pytest.raises(MappingError):
        map_parameters(ResonatorGeometry(0.0, 0.0), WAVELENGTH)  # marginal
    with pytest.raises(MappingError):
        map_parameters(ResonatorGeometry(3.9, 3.9), WAVELENGTH)  # unstable
    with pytest.raises(MappingError):
        # lower stability domain: stable but with B > 0 (wrong mass sign)
        map_parameters(ResonatorGeometry(0.5, 0.5), WAVELENGTH)


def test_quantum_params_validation():
    with pytest.raises(ValidationError):
        QuantumParams(0.0, 1.0, 1.0)
    with pytest.raises(ValidationError):
        QuantumParams(1.0, -1.0, 1.0)


# ---------------------------------------------------------------------------
# free-particle reference solution


def test_free_gaussian_initial_state():
    packet = GaussianWavepacket(width=1.2, center=0.4, momentum=0.0)
    x = np.linspace(-15.0, 15.0, 4001)
    phi = free_gaussian(packet, x, 0.0, 1.0, 1.0)
    dx = x[1] - x[0]
    assert abs(np.sum(np.abs(phi) ** 2) * dx - 1.0) < 1e-10
    ref = (2.0 * math.pi * 1.2 ** 2) ** (-0.25) * np.exp(
        -(x - 0.4) ** 2 / (4.0 * 1.2 ** 2))
    assert np.max(np.abs(phi - ref)) < 1e-12


def test_free_gaussian_spreading():
    sigma, hbar, mass = 0.7, 1.3, 0.9
    packet = GaussianWavepacket(width=sigma)
    t_star = 2.0 * mass * sigma ** 2 / hbar  # spreading time: width doubles in variance
    x = np.linspace(-20.0, 20.0, 8001)
    phi = free_gaussian(packet, x, t_star, hbar, mass)
    dx = x[1] - x[0]
    prob = np.abs(phi) ** 2
    mean = np.sum(prob * x) * dx
    width = math.sqrt(np.sum(prob * (x - mean) ** 2) * dx)
    assert abs(width / (math.sqrt(2.0) * sigma) - 1.0) < 1e-8


def test_free_gaussian_quadrature_norm():
    packet = GaussianWavepacket(width=1.0, momentum=0.5)
    x = np.linspace(-40.0, 40.0, 16001)
    phi = free_gaussian(packet, x, 3.0, 1.0, 1.0)
    dx = x[1] - x[0]
    assert abs(np.sum(np.abs(phi) ** 2) * dx - 1.0) < 1e-8


def test_free_gaussian_momentum_drift():
    packet = GaussianWavepacket(width=1.0, momentum=0.8)
    x = np.linspace(-30.0, 30.0, 8001)
    phi = free_gaussian(packet, x, 2.5, 1.0, 0.5)
    dx = x[1] - x[0]
    prob = np.abs(phi) ** 2
    mean = np.sum(prob * x) * dx
    assert abs(mean - 0.8 * 2.5 / 0.5) < 1e-8


# ---------------------------------------------------------------------------
# damped-oscillator propagator


def make_solution(gamma):
    return fundamental_solutions(
        OscillatorParams(PARAMS.omega, FrictionProfile.constant(gamma)))


def test_propagator_reduces_to_packet_at_zero_time():
    sol = make_solution(1e-3)
    packet = GaussianWavepacket(width=SPOT0 / 2.0, center=0.3 * SPOT0)
    x = propagator_grid()
    field = kanai_propagate(packet, sol, PARAMS, x, 0.0)
    phi = free_gaussian(packet, x, 0.0, PARAMS.hbar_eff, PARAMS.mass_eff)
    assert np.max(np.abs(field.samples - phi)) < 1e-12


def test_propagator_norm_conserved():
    sol = make_solution(1e-2)
    packet = GaussianWavepacket(width=SPOT0 / 2.0, center=0.3 * SPOT0)
    x = propagator_grid()
    for n in (0.5, 3.0, 20.0, 100.0):
        field = kanai_propagate(packet, sol, PARAMS, x, n)
        assert abs(field.norm_sq() - 1.0) < 1e-8, n


def test_propagator_pde_residual():
    # fourth-order finite differences in n, second-order in x, against the
    # damped-oscillator evolution equation with time-scaled coefficients
    gamma = 1e-2
    friction = FrictionProfile.constant(gamma)
    sol = make_solution(gamma)
    packet = GaussianWavepacket(width=SPOT0 / 2.0, center=0.3 * SPOT0)
    x = propagator_grid()
    dxg = x[1] - x[0]
    hb, ms, om = PARAMS.hbar_eff, PARAMS.mass_eff, PARAMS.omega
    step = 0.05
    worst = 0.0
    for n0 in (3.0, 7.5, 20.0):
        psi = [kanai_propagate(packet, sol, PARAMS, x, n0 + j * step).samples
               for j in (-2, -1, 0, 1, 2)]
        dpsi = (-psi[4] + 8.0 * psi[3] - 8.0 * psi[1] + psi[0]) / (12.0 * step)
        center = psi[2]
        lap = (np.roll(center, -1) - 2.0 * center + np.roll(center, 1)) / dxg ** 2
        g0, _ = friction.evaluate(n0)
        lhs = 1j * hb * dpsi
        rhs = (-(hb ** 2 / (2.0 * ms)) * math.exp(-g0) * lap
               + 0.5 * ms * om ** 2 * math.exp(g0) * x ** 2 * center)
        interior = slice(100, -100)
        worst = max(worst, np.max(np.abs((lhs - rhs)[interior]))
                    / np.max(np.abs(center)))
    assert worst < 1e-4


def test_propagator_caustic_guard():
    sol = make_solution(0.0)
    packet = GaussianWavepacket(width=SPOT0 / 2.0)
    x = propagator_grid()
    n_caustic = math.pi / (2.0 * PARAMS.omega)  # u2 = cos(omega n) = 0
    with pytest.raises(NearCausticError):
        kanai_propagate(packet, sol, PARAMS, x, n_caustic)


def test_propagator_requires_uniform_grid():
    sol = make_solution(1e-3)
    packet = GaussianWavepacket(width=SPOT0 / 2.0)
    x = np.geomspace(1e-4, 1e-1, 128)
    with pytest.raises(ValidationError):
        kanai_propagate(packet, sol, PARAMS, x, 1.0)


# ---------------------------------------------------------------------------
# moment laws


def test_moments_initial_values():
    sol = make_solution(1e-3)
    packet = GaussianWavepacket(width=SPOT0 / 2.0, center=0.25 * SPOT0,
                                momentum=1e-5)
    x_mean, delta_x = moments(packet, sol, PARAMS, 0.0)
    assert abs(x_mean - 0.25 * SPOT0) < 1e-15
    assert abs(delta_x - SPOT0 / 2.0) < 1e-15


def test_moments_match_direct_quadrature():
    sol = make_solution(1e-2)
    packet = GaussianWavepacket(width=SPOT0 / 2.0, center=0.3 * SPOT0)
    x = propagator_grid(4096, 10.0 * SPOT0)
    dxg = x[1] - x[0]
    for n in (1.0, 4.0, 17.0):
        field = kanai_propagate(packet, sol, PARAMS, x, n)
        prob = np.abs(field.samples) ** 2
        total = np.sum(prob) * dxg
        mean = np.sum(prob * x) * dxg / total
        width = math.sqrt(np.sum(prob * (x - mean) ** 2) * dxg / total)
        x_mean, delta_x = moments(packet, sol, PARAMS, n)
        assert abs(mean / x_mean - 1.0) < 1e-6, n
        assert abs(width / delta_x - 1.0) < 1e-6, n


def test_matched_packet_width_is_stationary_without_friction():
    sol = make_solution(0.0)
    sigma_coh = math.sqrt(PARAMS.hbar_eff / (2.0 * PARAMS.mass_eff * PARAMS.omega))
    packet = GaussianWavepacket(width=sigma_coh)
    n = np.linspace(0.0, 20.0, 200)
    # avoid the caustics of u2 where the formula is evaluated in the limit
    n = n[np.abs(np.cos(PARAMS.omega * n)) > 1e-3]
    _, delta_x = moments(packet, sol, PARAMS, n)
    assert np.max(np.abs(delta_x / sigma_coh - 1.0)) < 1e-10


def test_width_collapses_with_friction():
    gamma = 1e-3
    sol = make_solution(gamma)
    packet = GaussianWavepacket(width=SPOT0 / 2.0)
    n = np.arange(0.0, 5001.0)
    _, delta_x = moments(packet, sol, PARAMS, n)
    # per-period envelope decreases monotonically
    period = 2.0 * math.pi / math.sqrt(PARAMS.omega ** 2 - gamma ** 2 / 4.0)
    lag = int(math.ceil(period))
    running = np.array([delta_x[i:i + lag + 1].max()
                        for i in range(delta_x.size - lag)])
    assert np.all(np.diff(running) < 0.0)
    assert delta_x[-1] < 0.1 * delta_x[0]


def test_centroid_obeys_classical_equation():
    gamma = 1e-3
    sol = make_solution(gamma)
    packet = GaussianWavepacket(width=SPOT0 / 2.0, center=0.4 * SPOT0)
    h = 0.004
    n = np.arange(0.0, 40.0, h)
    x_mean, _ = moments(packet, sol, PARAMS, n)
    xdd = (x_mean[2:] - 2.0 * x_mean[1:-1] + x_mean[:-2]) / h ** 2
    xd = (x_mean[2:] - x_mean[:-2]) / (2.0 * h)
    resid = xdd + gamma * xd + PARAMS.omega ** 2 * x_mean[1:-1]
    assert np.max(np.abs(resid)) / np.max(np.abs(x_mean)) < 1e-4


# ---------------------------------------------------------------------------
# engine cross-checks


def test_crosscheck_stationary_mode():
    sched = MirrorSchedule(GEOM0, FrictionProfile.constant(0.0))
    records = crosscheck_engines(GEOM0, WAVELENGTH, sched, 200)
    assert len(records) == 201
    assert max(r["l2_distance"] for r in records) < 1e-6


def test_crosscheck_damped_mode():
    sched = MirrorSchedule(GEOM0, FrictionProfile.constant(1e-2))
    records = crosscheck_engines(GEOM0, WAVELENGTH, sched, 200)
    assert max(r["l2_distance"] for r in records) < 1e-2
    widths_wave = np.array([r["width_wave"] for r in records])
    widths_analytic = np.array([r["width_analytic"] for r in records])
    assert np.max(np.abs(widths_wave / widths_analytic - 1.0)) < 1e-2


def test_crosscheck_displaced_centroids_agree_three_ways():
    sched = MirrorSchedule(GEOM0, FrictionProfile.constant(1e-2))
    x0 = SPOT0
    records = crosscheck_engines(GEOM0, WAVELENGTH, sched, 200, center=x0)
    ray = crosscheck_ray_centroid(sched, x0, 0.0, 200)
    wave = np.array([r["centroid_wave"] for r in records])
    analytic = np.array([r["centroid_analytic"] for r in records])
    assert np.max(np.abs(wave - analytic)) / x0 < 0.01
    assert np.max(np.abs(wave - ray)) / x0 < 0.01
    assert np.max(np.abs(analytic - ray)) / x0 < 0.01
