"""Theta field, the four bounds, verification, and gauge optimization."""

import math

import numpy as np
import pytest

from szscatter.bounds import (BoundReport, bound_report, optimize_gauge,
                              phi_prime_family, theta_field, theta_integral,
                              verify_bounds, GaugeFamily)
from szscatter.errors import (BoundViolation, ComplexGaugeRejected,
                              EmptyFamily, GaugeDegenerate, TurningPoint)
from szscatter.gauges import (GaugeTriple, constant_field, gauge_antiphase,
                              gauge_constant, gauge_special_delta, gauge_wkb)
from szscatter.oracle import (OracleResult, analytic_square_barrier,
                              direct_integrate)
from szscatter.potentials import (EnergySpec, gaussian, square_barrier,
                                  truncate_domain, wavenumber_field)

SQRT2 = math.sqrt(2.0)

# Hand integrals for the square barrier (V0 = 1, L = 1) and the Gaussian
# (V0 = 1, sigma = 1) under the constant gauge:
#   barrier, E = 2:   integrand 1/(2 sqrt(2)) over width 1
#   gaussian, E = 2:  (1/(2 sqrt(2))) * integral of V = sqrt(2 pi)/(2 sqrt(2))
THETA_BARRIER_E2 = 0.35355339059327373
THETA_GAUSS_E2 = 0.8862269254527580


def _setup(p, energy):
    e = EnergySpec(energy)
    grid = truncate_domain(p, e)
    w = wavenumber_field(p, e)
    return e, grid, w


def test_theta_constant_gauge_pointwise():
    p = square_barrier(1.0, 1.0)
    _, _, w = _setup(p, 2.0)
    t = theta_field(gauge_constant(SQRT2), w)
    assert t.theta(0.0) == pytest.approx(1.0 / (2.0 * SQRT2), abs=1e-14)
    assert t.theta(2.0) == pytest.approx(0.0, abs=1e-14)


def test_theta_wkb_is_log_derivative():
    p = gaussian(1.0, 1.0)
    _, grid, w = _setup(p, 2.0)
    g = gauge_wkb(w, grid)
    t = theta_field(g, w)
    for x in (-1.0, 0.5, 2.0):
        expected = abs(float(w.k_prime(x))) / (2.0 * float(w.k(x)))
        assert t.theta(x) == pytest.approx(expected, abs=1e-10)


def test_theta_zero_for_free_potential():
    p = square_barrier(0.0, 1.0)
    _, grid, w = _setup(p, 2.0)
    t = theta_field(gauge_constant(SQRT2), w)
    xs = np.linspace(grid.x_min, grid.x_max, 9)
    np.testing.assert_allclose(np.asarray(t.theta(xs)), 0.0, atol=1e-15)
    assert theta_integral(t, grid, 1e-10) == pytest.approx(0.0, abs=1e-14)


def test_theta_nonnegative(suite):
    for case in suite:
        for name, g in case.gauges.items():
            if g.phi_prime_jumps:
                continue
            t = theta_field(g, case.w)
            xs = np.linspace(case.grid.x_min, case.grid.x_max, 101)
            assert np.min(np.asarray(t.theta(xs))) >= 0.0, (case.name, name)


def test_theta_integral_hand_values():
    p = square_barrier(1.0, 1.0)
    e, grid, w = _setup(p, 2.0)
    t = theta_field(gauge_constant(SQRT2), w)
    assert theta_integral(t, grid, 1e-10) == pytest.approx(
        THETA_BARRIER_E2, abs=1e-12)
    pg = gaussian(1.0, 1.0)
    eg, gridg, wg = _setup(pg, 2.0)
    tg = theta_field(gauge_constant(SQRT2), wg)
    # The truncated tail removes ~1e-11 of mass relative to the full line.
    assert theta_integral(tg, gridg, 1e-10) == pytest.approx(
        THETA_GAUSS_E2, abs=1e-8)


def test_theta_rejects_complex_gauge():
    p = square_barrier(1.0, 1.0)
    _, _, w = _setup(p, 2.0)
    g = GaugeTriple(
        phi=constant_field(0.0), phi_prime=constant_field(1.0 + 0.1j),
        phi_double_prime=constant_field(0.0), delta=constant_field(0.0),
        delta_prime=constant_field(0.0), chi=constant_field(0.0),
        chi_prime=constant_field(0.0), is_real=False, phi_prime_scale=1.0)
    with pytest.raises(ComplexGaugeRejected):
        theta_field(g, w)


def test_theta_rejects_discontinuous_phi_prime():
    p = square_barrier(1.0, 1.0)
    _, grid, w = _setup(p, 2.0)
    g = gauge_wkb(w, grid)  # phi' jumps at the barrier edges
    with pytest.raises(GaugeDegenerate):
        theta_field(g, w)


def test_delta_invariance_bitwise():
    # Two gauges differing only in Delta sample bit-identical theta.
    p = square_barrier(1.0, 1.0)
    e, grid, w = _setup(p, 2.0)
    base = gauge_constant(SQRT2)
    variants = (gauge_antiphase(base), gauge_special_delta(base, w, grid))
    xs = np.linspace(grid.x_min, grid.x_max, 257)
    ref = np.asarray(theta_field(base, w).theta(xs))
    for g in variants:
        got = np.asarray(theta_field(g, w).theta(xs))
        assert np.array_equal(ref, got)


def test_bound_report_identities():
    p = square_barrier(1.0, 1.0)
    e, grid, w = _setup(p, 2.0)
    rep = bound_report(p, e, gauge_constant(SQRT2), 1e-10, grid=grid)
    j = rep.theta_integral
    assert j == pytest.approx(THETA_BARRIER_E2, abs=1e-12)
    assert rep.alpha_bound == pytest.approx(math.cosh(j), abs=1e-15)
    assert rep.beta_bound == pytest.approx(math.sinh(j), abs=1e-15)
    assert rep.t_lower == pytest.approx(1.0 / math.cosh(j) ** 2, abs=1e-15)
    assert rep.r_upper == pytest.approx(math.tanh(j) ** 2, abs=1e-15)
    assert rep.t_lower + rep.r_upper == pytest.approx(1.0, abs=1e-15)
    assert rep.alpha_bound**2 - rep.beta_bound**2 == pytest.approx(1.0, abs=1e-12)


def test_bound_trivial_when_theta_zero():
    p = square_barrier(0.0, 1.0)
    e, grid, _ = _setup(p, 1.0)
    rep = bound_report(p, e, gauge_constant(1.0), 1e-10, grid=grid)
    assert rep.theta_integral == pytest.approx(0.0, abs=1e-13)
    assert rep.t_lower == pytest.approx(1.0, abs=1e-13)
    assert rep.r_upper == pytest.approx(0.0, abs=1e-13)


def test_verify_bounds_margin():
    p = square_barrier(1.0, 1.0)
    e, grid, _ = _setup(p, 2.0)
    rep = bound_report(p, e, gauge_constant(SQRT2), 1e-10, grid=grid)
    exact = analytic_square_barrier(1.0, 1.0, e)
    rec = verify_bounds(rep, exact)
    assert rec.margin_t == pytest.approx(
        exact.transmission - rep.t_lower, abs=1e-15)
    assert rec.margin_t > 0.03
    assert rec.margin_r > 0.03


def test_verify_bounds_saturated_margin_zero():
    # At E = V0/2 the constant-gauge bound is exactly saturated.
    p = square_barrier(1.0, 1.0)
    e, grid, _ = _setup(p, 0.5)
    rep = bound_report(p, e, gauge_constant(math.sqrt(0.5)), 1e-10, grid=grid)
    exact = analytic_square_barrier(1.0, 1.0, e)
    rec = verify_bounds(rep, exact)
    assert abs(rec.margin_t) < 1e-12


def test_verify_bounds_violation():
    fake = BoundReport(theta_integral=0.1, alpha_bound=math.cosh(0.1),
                       beta_bound=math.sinh(0.1), t_lower=0.99,
                       r_upper=0.01, gauge_id="synthetic")
    exact = OracleResult(0.9187, 0.0813, (), "direct_integration")
    with pytest.raises(BoundViolation):
        verify_bounds(fake, exact)


def test_optimizer_improves_on_baseline():
    p = gaussian(1.0, 1.0)
    e, grid, w = _setup(p, 2.0)
    family = phi_prime_family(p, e, grid)
    gauge, rep = optimize_gauge(p, e, family, 1e-10, grid=grid)
    base = theta_integral(theta_field(family.builder(0.0), w), grid, 1e-10)
    assert rep.theta_integral <= base + 1e-12
    # Above a smooth bump the blended slope beats the constant gauge.
    assert rep.theta_integral < base - 1e-3
    exact = direct_integrate(p, e, grid, 1e-12)
    verify_bounds(rep, exact)


def test_optimizer_free_potential_returns_zero():
    p = square_barrier(0.0, 1.0)
    e, grid, _ = _setup(p, 2.0)
    family = phi_prime_family(p, e, grid)
    gauge, rep = optimize_gauge(p, e, family, 1e-10, grid=grid)
    assert rep.theta_integral == pytest.approx(0.0, abs=1e-13)
    assert gauge.label == "constant(k=1.41421)"  # smallest s wins ties


def test_optimizer_tunneling_falls_back_to_baseline():
    # Members with s > 0 need k^2 > 0; under the barrier only s = 0 works.
    p = square_barrier(1.0, 1.0)
    e, grid, w = _setup(p, 0.5)
    family = phi_prime_family(p, e, grid)
    gauge, rep = optimize_gauge(p, e, family, 1e-10, grid=grid)
    base = theta_integral(theta_field(family.builder(0.0), w), grid, 1e-10)
    assert rep.theta_integral == pytest.approx(base, abs=1e-12)
    exact = analytic_square_barrier(1.0, 1.0, e)
    verify_bounds(rep, exact)


def test_theta_integral_nonconvergence_on_degenerate_slope():
    # phi = x^3 has phi' touching zero, making theta non-integrable.
    from szscatter.errors import NonConvergence
    from szscatter.gauges import gauge_from_tables
    from szscatter.potentials import DomainGrid

    xs = np.linspace(-1.0, 1.0, 81)
    g = gauge_from_tables((xs, xs**3))
    p = square_barrier(0.0, 1.0)
    w = wavenumber_field(p, EnergySpec(1.0))
    t = theta_field(g, w)
    grid = DomainGrid(-1.0, 1.0, max_step=0.01)
    with pytest.raises(NonConvergence):
        theta_integral(t, grid, 1e-10)


def test_optimizer_empty_family():
    def always_fails(s):
        raise TurningPoint("no admissible member")

    family = GaugeFamily(name="empty", builder=always_fails)
    p = square_barrier(1.0, 1.0)
    e, grid, _ = _setup(p, 2.0)
    with pytest.raises(EmptyFamily):
        optimize_gauge(p, e, family, 1e-10, grid=grid)
