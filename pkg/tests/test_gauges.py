"""Gauge presets, derived rho fields, and structural identities."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from szscatter.errors import TurningPoint
from szscatter.gauges import (gauge_antiphase, gauge_constant,
                              gauge_from_tables, gauge_interpolated,
                              gauge_special_delta, gauge_wkb, rho_pair,
                              with_constant_chi)
from szscatter.potentials import (EnergySpec, gaussian, square_barrier,
                                  truncate_domain, wavenumber_field)
from szscatter.sz_core import rhs_matrix

SQRT2 = math.sqrt(2.0)


def _barrier_setup(energy):
    p = square_barrier(1.0, 1.0)
    e = EnergySpec(energy)
    return p, e, truncate_domain(p, e), wavenumber_field(p, e)


def test_constant_gauge_values():
    g = gauge_constant(SQRT2)
    assert g.phi(1.0) == pytest.approx(SQRT2)
    assert g.phi_prime(5.0) == pytest.approx(SQRT2)
    assert g.phi_double_prime(0.3) == 0.0
    assert g.delta(2.0) == 0.0 and g.chi(2.0) == 0.0
    assert g.is_real and g.delta_is_zero


def test_constant_gauge_rho_free():
    p = square_barrier(0.0, 1.0)
    w = wavenumber_field(p, EnergySpec(1.0))
    r = rho_pair(gauge_constant(1.0), w)
    for x in (-2.0, 0.0, 3.0):
        assert r.rho1(x) == 0.0
        assert r.rho2(x) == pytest.approx(0.0, abs=1e-15)


def test_constant_gauge_rho_barrier():
    _, _, _, w = _barrier_setup(2.0)
    r = rho_pair(gauge_constant(SQRT2), w)
    assert r.rho2(0.0) == pytest.approx(-1.0, abs=1e-14)
    assert r.rho2(2.0) == pytest.approx(0.0, abs=1e-14)


@given(st.floats(0.2, 3.0), st.floats(-1.0, 1.0), st.floats(-3.0, 3.0),
       st.floats(0.3, 10.0))
@settings(max_examples=60, deadline=None)
def test_rho_with_constant_chi(k_ref, chi, x, energy):
    # chi(x) = c, phi' = k_ref: rho1 = 2 c k_ref, rho2 = k^2 + c^2 - k_ref^2.
    p = square_barrier(1.0, 1.0)
    w = wavenumber_field(p, EnergySpec(energy))
    g = with_constant_chi(gauge_constant(k_ref), chi)
    r = rho_pair(g, w)
    assert r.rho1(x) == pytest.approx(2.0 * chi * k_ref, abs=1e-13)
    expected = w.k_squared(x) + chi**2 - k_ref**2
    assert r.rho2(x) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("maker", ["constant", "wkb", "special_delta",
                                   "antiphase"])
def test_derivative_consistency(maker):
    # Central differences at h = 1e-4 reproduce the stored derivatives
    # to 1e-6 for every preset gauge.
    p = gaussian(1.0, 1.0)
    e = EnergySpec(2.0)
    grid = truncate_domain(p, e)
    w = wavenumber_field(p, e)
    base = gauge_constant(w.k_left)
    g = {"constant": base,
         "wkb": lambda: gauge_wkb(w, grid),
         "special_delta": lambda: gauge_special_delta(base, w, grid),
         "antiphase": lambda: gauge_antiphase(gauge_wkb(w, grid))}[maker]
    if callable(g):
        g = g()
    h = 1e-4
    xs = np.linspace(grid.x_min + 1.0, grid.x_max - 1.0, 17)
    for fn, dfn in ((g.phi, g.phi_prime), (g.phi_prime, g.phi_double_prime),
                    (g.delta, g.delta_prime), (g.chi, g.chi_prime)):
        fd = (np.asarray(fn(xs + h)) - np.asarray(fn(xs - h))) / (2 * h)
        np.testing.assert_allclose(fd, np.asarray(dfn(xs)), atol=1e-6)


def test_wkb_free_matches_constant():
    p = square_barrier(0.0, 1.0)
    e = EnergySpec(2.0)
    grid = truncate_domain(p, e)
    w = wavenumber_field(p, e)
    g = gauge_wkb(w, grid)
    xs = np.linspace(grid.x_min, grid.x_max, 9)
    np.testing.assert_allclose(np.asarray(g.phi_prime(xs)), SQRT2, atol=1e-14)
    # phi accumulates from the left edge
    assert g.phi(grid.x_min) == pytest.approx(0.0, abs=1e-14)


def test_wkb_rho_vanishes_where_smooth():
    p = gaussian(1.0, 1.0)
    e = EnergySpec(2.0)
    grid = truncate_domain(p, e)
    w = wavenumber_field(p, e)
    g = gauge_wkb(w, grid)
    r = rho_pair(g, w)
    xs = np.linspace(-3.0, 3.0, 11)
    np.testing.assert_allclose(np.asarray(r.rho2(xs)), 0.0, atol=1e-12)
    np.testing.assert_allclose(np.asarray(r.rho1(xs)),
                               np.asarray(w.k_prime(xs)), atol=1e-12)


def test_wkb_turning_point():
    _, _, grid, w = _barrier_setup(0.5)
    with pytest.raises(TurningPoint):
        gauge_wkb(w, grid)


def test_wkb_barrier_flags_phi_prime_jump():
    _, _, grid, w = _barrier_setup(2.0)
    g = gauge_wkb(w, grid)
    assert g.phi_prime_jumps


def test_special_delta_identity():
    # The constructed Delta' satisfies 2 phi' Delta' - rho2 = 0 pointwise.
    p, e, grid, w = _barrier_setup(2.0)
    base = gauge_constant(w.k_left)
    g = gauge_special_delta(base, w, grid)
    r = rho_pair(g, w)
    for x in np.linspace(grid.x_min, grid.x_max, 23):
        lhs = 2.0 * g.phi_prime(x) * g.delta_prime(x) - r.rho2(x)
        assert abs(lhs) < 1e-13


def test_special_delta_free_gives_zero_delta():
    p = square_barrier(0.0, 1.0)
    e = EnergySpec(1.0)
    grid = truncate_domain(p, e)
    w = wavenumber_field(p, e)
    g = gauge_special_delta(gauge_constant(1.0), w, grid)
    xs = np.linspace(grid.x_min, grid.x_max, 9)
    np.testing.assert_allclose(np.asarray(g.delta(xs)), 0.0, atol=1e-13)


def test_special_delta_slope_inside_barrier():
    p, e, grid, w = _barrier_setup(2.0)
    g = gauge_special_delta(gauge_constant(SQRT2), w, grid)
    assert g.delta_prime(0.0) == pytest.approx(-1.0 / (2.0 * SQRT2), abs=1e-13)
    assert g.delta_prime(grid.x_max) == pytest.approx(0.0, abs=1e-13)


def test_special_delta_zero_diagonal():
    p, e, grid, w = _barrier_setup(2.0)
    g = gauge_special_delta(gauge_constant(SQRT2), w, grid)
    r = rho_pair(g, w)
    for x in np.linspace(grid.x_min, grid.x_max, 17):
        m = rhs_matrix(g, r, float(x))
        assert m[0, 0] == 0.0 + 0.0j
        assert m[1, 1] == 0.0 + 0.0j


def test_special_delta_requires_zero_delta_base():
    p, e, grid, w = _barrier_setup(2.0)
    base = gauge_antiphase(gauge_constant(SQRT2))
    with pytest.raises(ValueError):
        gauge_special_delta(base, w, grid)


def test_antiphase_cancels_phase_exactly():
    g = gauge_antiphase(gauge_constant(SQRT2))
    for x in (-3.0, 0.0, 1.7, 12.0):
        assert g.phi(x) + g.delta(x) == 0.0


def test_antiphase_free_generator():
    # V = 0, phi' = sqrt(E): diagonal +-i sqrt(E), off-diagonal 0.
    p = square_barrier(0.0, 1.0)
    e = EnergySpec(2.0)
    w = wavenumber_field(p, e)
    g = gauge_antiphase(gauge_constant(SQRT2))
    r = rho_pair(g, w)
    m = rhs_matrix(g, r, 0.3)
    assert m[0, 0] == pytest.approx(1j * SQRT2, abs=1e-13)
    assert m[1, 1] == pytest.approx(-1j * SQRT2, abs=1e-13)
    assert abs(m[0, 1]) < 1e-14 and abs(m[1, 0]) < 1e-14


def test_antiphase_offdiagonal_magnitude():
    p, e, grid, w = _barrier_setup(2.0)
    g = gauge_antiphase(gauge_constant(SQRT2))
    r = rho_pair(g, w)
    m = rhs_matrix(g, r, 0.0)
    expected = abs(complex(r.rho1(0.0), r.rho2(0.0))) / (2.0 * SQRT2)
    assert abs(m[0, 1]) == pytest.approx(expected, abs=1e-14)
    # no oscillatory factor: the entry is exactly (rho1 + i rho2)/(2 phi')
    assert m[0, 1] == pytest.approx(1j * r.rho2(0.0) / (2 * SQRT2), abs=1e-14)


def test_real_gauges_give_real_rho(suite):
    for case in suite:
        for name, g in case.gauges.items():
            assert g.is_real
            r = case.rho(name)
            xs = np.linspace(case.grid.x_min, case.grid.x_max, 7)
            assert np.all(np.isreal(np.asarray(r.rho1(xs))))
            assert np.all(np.isreal(np.asarray(r.rho2(xs))))


def test_interpolated_family_endpoints():
    p = gaussian(1.0, 1.0)
    e = EnergySpec(2.0)
    grid = truncate_domain(p, e)
    w = wavenumber_field(p, e)
    g0 = gauge_interpolated(w, grid, 0.0)
    assert g0.phi_prime(0.0) == pytest.approx(w.k_left)
    g1 = gauge_interpolated(w, grid, 1.0)
    assert g1.phi_prime(0.0) == pytest.approx(float(w.k(0.0)), abs=1e-12)
    ghalf = gauge_interpolated(w, grid, 0.5)
    assert ghalf.phi_prime(0.0) == pytest.approx(
        0.5 * w.k_left + 0.5 * float(w.k(0.0)), abs=1e-12)


def test_gauge_from_tables():
    xs = np.linspace(-5.0, 5.0, 201)
    g = gauge_from_tables((xs, 1.3 * xs), chi_table=(xs, 0.1 * np.ones_like(xs)))
    assert g.phi_prime(0.7) == pytest.approx(1.3, abs=1e-9)
    assert g.chi(0.2) == pytest.approx(0.1, abs=1e-12)
    assert g.delta_is_zero


def test_with_tabulated_chi_scatters_consistently():
    # Gauge independence extends to any admissible chi: a localized
    # tabulated chi must leave the transmission unchanged.
    from szscatter.gauges import with_tabulated_chi
    from szscatter.sz_core import scattering_amplitudes

    p = gaussian(1.0, 1.0)
    e = EnergySpec(2.0)
    grid = truncate_domain(p, e)
    w = wavenumber_field(p, e)
    base = gauge_constant(w.k_left)
    xs = np.linspace(grid.x_min, grid.x_max, 301)
    gc = with_tabulated_chi(base, xs, 0.2 * np.exp(-xs**2))
    assert gc.chi(0.0) == pytest.approx(0.2, abs=1e-6)
    ref = scattering_amplitudes(p, e, base, 1e-12, grid=grid)
    got = scattering_amplitudes(p, e, gc, 1e-12, grid=grid)
    assert got.transmission == pytest.approx(ref.transmission, abs=1e-8)


def test_gauge_from_files(tmp_path):
    from szscatter.gauges import gauge_from_files

    xs = np.linspace(-3.0, 3.0, 61)
    phi_file = tmp_path / "phi.dat"
    phi_file.write_text("# phi table\n" + "\n".join(
        f"{x} {1.2 * x}" for x in xs))
    delta_file = tmp_path / "delta.dat"
    delta_file.write_text("\n".join(f"{x} {0.3 * x}" for x in xs))
    g = gauge_from_files(phi_file, delta_path=delta_file)
    assert g.phi_prime(0.5) == pytest.approx(1.2, abs=1e-9)
    assert g.delta_prime(0.5) == pytest.approx(0.3, abs=1e-9)
    assert not g.delta_is_zero
