"""Gauge triples (phi, Delta, chi), their derived rho pair, and presets.

A gauge triple parameterizes the two-wave decomposition of the
wavefunction.  Presets cover the useful special cases: constant phase
slope, local-wavenumber slope (WKB-like), the diagonal-killing Delta
choice, and the phase-killing Delta = -phi choice.  Arbitrary tabulated
gauges are accepted through gauge_from_tables.
"""

import numpy as np
from dataclasses import dataclass, field
from scipy.interpolate import PchipInterpolator

from ._tables import TABLE_STEP, segmented_antiderivative
from .errors import GaugeDegenerate, TurningPoint
from .potentials import DomainGrid, WaveNumberField, scalarize

# Relative floor for |phi'|; below this the system matrix is unusable.
DEGENERACY_RTOL = 1.0e-12


def constant_field(value):
    """Field callable that is identically `value`."""
    val = complex(value)
    cast = float if val.imag == 0 else complex
    out = val.real if val.imag == 0 else val

    def raw(xv):
        return np.full(xv.shape, out)

    return scalarize(raw, cast)


@dataclass(frozen=True, eq=False)
class GaugeTriple:
    """The three auxiliary functions with the derivatives the system needs.

    All seven function attributes accept scalars or arrays.  Flags record
    structural facts the numerics exploit: delta_is_zero marks presets
    eligible as a base for the diagonal-killing construction,
    diag_vanishes marks gauges whose generator diagonal is identically
    zero, and phi_prime_jumps marks gauges whose phi' is discontinuous
    (their phi'' is distributional, so bound integrals reject them).
    """

    phi: object = field(repr=False)
    phi_prime: object = field(repr=False)
    phi_double_prime: object = field(repr=False)
    delta: object = field(repr=False)
    delta_prime: object = field(repr=False)
    chi: object = field(repr=False)
    chi_prime: object = field(repr=False)
    is_real: bool = True
    label: str = "gauge"
    breakpoints: tuple = ()
    phi_prime_scale: float = 1.0
    phi_prime_jumps: bool = False
    delta_is_zero: bool = False
    diag_vanishes: bool = False
    grid: DomainGrid = None


@dataclass(frozen=True, eq=False)
class RhoPair:
    """The two gauge-derived fields populating the evolution generator:
    rho1 = phi'' + 2 chi phi', rho2 = k^2 + chi^2 + chi' - (phi')^2."""

    rho1: object = field(repr=False)
    rho2: object = field(repr=False)
    breakpoints: tuple = ()
    is_real: bool = True


def rho_pair(g: GaugeTriple, w: WaveNumberField) -> RhoPair:
    """Pointwise evaluation of both rho definitions."""
    cast = float if g.is_real else complex

    def raw_rho1(xv):
        return g.phi_double_prime(xv) + 2.0 * g.chi(xv) * g.phi_prime(xv)

    def raw_rho2(xv):
        return (w.k_squared(xv) + g.chi(xv) ** 2 + g.chi_prime(xv)
                - g.phi_prime(xv) ** 2)

    breaks = tuple(sorted(set(g.breakpoints) | set(w.breakpoints)))
    return RhoPair(
        rho1=scalarize(raw_rho1, cast),
        rho2=scalarize(raw_rho2, cast),
        breakpoints=breaks,
        is_real=g.is_real,
    )


def gauge_constant(k_ref: float, chi: float = 0.0) -> GaugeTriple:
    """Simplest admissible gauge: phi = k_ref * x, Delta = 0.

    An optional constant chi is accepted; chi = 0 is the plain preset.
    """
    if not np.isreal(k_ref) or k_ref <= 0:
        raise ValueError("k_ref must be a positive real number")
    k_ref = float(k_ref)
    chi_c = complex(chi)
    is_real = chi_c.imag == 0.0
    label = f"constant(k={k_ref:.6g})"
    if chi_c != 0:
        label += f",chi={chi:.6g}"
    return GaugeTriple(
        phi=scalarize(lambda xv: k_ref * xv),
        phi_prime=constant_field(k_ref),
        phi_double_prime=constant_field(0.0),
        delta=constant_field(0.0),
        delta_prime=constant_field(0.0),
        chi=constant_field(chi),
        chi_prime=constant_field(0.0),
        is_real=is_real,
        label=label,
        phi_prime_scale=k_ref,
        delta_is_zero=True,
    )


def _grid_edges(grid: DomainGrid, breakpoints) -> list:
    inner = sorted(b for b in set(breakpoints)
                   if grid.x_min < b < grid.x_max)
    return [grid.x_min, *inner, grid.x_max]


def _min_positive_k2(w: WaveNumberField, edges) -> float:
    worst = np.inf
    for lo, hi in zip(edges[:-1], edges[1:]):
        span = hi - lo
        eps = 1e-12 * max(1.0, abs(lo), abs(hi))
        xs = np.linspace(lo + eps, hi - eps, 4097)
        worst = min(worst, float(np.min(w.k_squared(xs))))
    return worst


def gauge_wkb(w: WaveNumberField, grid: DomainGrid) -> GaugeTriple:
    """Local-wavenumber gauge phi' = k(x), valid above the barrier only."""
    edges = _grid_edges(grid, w.breakpoints)
    if _min_positive_k2(w, edges) <= 0.0:
        raise TurningPoint("k^2(x) <= 0 on the grid; phi' = k(x) "
                           "is inadmissible")
    spacing = min(grid.max_step, TABLE_STEP)
    phi = segmented_antiderivative(w.k, edges, spacing)
    jumps = False
    for b in w.breakpoints:
        if grid.x_min < b < grid.x_max:
            eps = 1e-9 * max(1.0, abs(b))
            if abs(float(w.k(b - eps)) - float(w.k(b + eps))) > 1e-9:
                jumps = True
                break
    scale = float(np.max(w.k(np.linspace(grid.x_min, grid.x_max, 2049))))
    return GaugeTriple(
        phi=scalarize(lambda xv: np.asarray(phi(xv))),
        phi_prime=w.k,
        phi_double_prime=w.k_prime,
        delta=constant_field(0.0),
        delta_prime=constant_field(0.0),
        chi=constant_field(0.0),
        chi_prime=constant_field(0.0),
        is_real=True,
        label="wkb",
        breakpoints=tuple(b for b in w.breakpoints
                          if grid.x_min < b < grid.x_max),
        phi_prime_scale=scale,
        phi_prime_jumps=jumps,
        delta_is_zero=True,
        grid=grid,
    )


def gauge_interpolated(w: WaveNumberField, grid: DomainGrid,
                       s: float) -> GaugeTriple:
    """Blend between the constant and local-wavenumber slopes:
    phi'(x) = (1-s) k_left + s k(x), chi = Delta = 0.

    s = 0 reproduces the constant gauge up to an irrelevant additive
    phase constant; s = 1 is the WKB-like gauge.  Members with s > 0
    require k^2 > 0 on the grid.
    """
    if not 0.0 <= s <= 1.0:
        raise ValueError("s must lie in [0, 1]")
    k_ref = w.k_left
    if s == 0.0:
        return gauge_constant(k_ref)
    edges = _grid_edges(grid, w.breakpoints)
    if _min_positive_k2(w, edges) <= 0.0:
        raise TurningPoint(f"family member s={s:g} needs k^2 > 0 on the grid")

    def raw_slope(xv):
        return (1.0 - s) * k_ref + s * np.asarray(w.k(xv))

    def raw_curv(xv):
        return s * np.asarray(w.k_prime(xv))

    spacing = min(grid.max_step, TABLE_STEP)
    phi = segmented_antiderivative(scalarize(raw_slope), edges, spacing)
    scale = float(np.max(raw_slope(np.linspace(grid.x_min, grid.x_max, 2049))))
    jumps = bool(w.breakpoints) and s > 0.0
    return GaugeTriple(
        phi=scalarize(lambda xv: np.asarray(phi(xv))),
        phi_prime=scalarize(raw_slope),
        phi_double_prime=scalarize(raw_curv),
        delta=constant_field(0.0),
        delta_prime=constant_field(0.0),
        chi=constant_field(0.0),
        chi_prime=constant_field(0.0),
        is_real=True,
        label=f"family(s={s:.6g})",
        breakpoints=tuple(b for b in w.breakpoints
                          if grid.x_min < b < grid.x_max),
        phi_prime_scale=scale,
        phi_prime_jumps=jumps,
        delta_is_zero=True,
        grid=grid,
    )


def gauge_special_delta(base: GaugeTriple, w: WaveNumberField,
                        grid: DomainGrid) -> GaugeTriple:
    """Diagonal-killing choice Delta' = rho2 / (2 phi') on top of a base
    gauge with Delta = 0.  The evolution generator built from the result
    has an identically zero diagonal."""
    if not base.delta_is_zero:
        raise ValueError("base gauge must have Delta identically zero")
    edges = _grid_edges(grid, set(base.breakpoints) | set(w.breakpoints))

    def raw_dprime(xv):
        ppr = np.asarray(base.phi_prime(xv))
        r2 = (np.asarray(w.k_squared(xv)) + np.asarray(base.chi(xv)) ** 2
              + np.asarray(base.chi_prime(xv)) - ppr**2)
        return r2 / (2.0 * ppr)

    probe = np.linspace(grid.x_min, grid.x_max, 4097)
    ppr_abs = np.abs(np.asarray(base.phi_prime(probe)))
    if float(np.min(ppr_abs)) <= DEGENERACY_RTOL * float(np.max(ppr_abs)):
        raise GaugeDegenerate("|phi'| below the degeneracy threshold")

    spacing = min(grid.max_step, TABLE_STEP)
    delta = segmented_antiderivative(scalarize(raw_dprime), edges, spacing)
    return GaugeTriple(
        phi=base.phi,
        phi_prime=base.phi_prime,
        phi_double_prime=base.phi_double_prime,
        delta=scalarize(lambda xv: np.asarray(delta(xv))),
        delta_prime=scalarize(raw_dprime),
        chi=base.chi,
        chi_prime=base.chi_prime,
        is_real=base.is_real,
        label=f"special_delta[{base.label}]",
        breakpoints=tuple(sorted(set(base.breakpoints) | set(w.breakpoints))),
        phi_prime_scale=base.phi_prime_scale,
        phi_prime_jumps=base.phi_prime_jumps,
        delta_is_zero=False,
        diag_vanishes=True,
        grid=grid,
    )


def gauge_antiphase(base: GaugeTriple) -> GaugeTriple:
    """Phase-killing choice Delta = -phi: every exponent phi + Delta in
    the generator vanishes identically."""
    return GaugeTriple(
        phi=base.phi,
        phi_prime=base.phi_prime,
        phi_double_prime=base.phi_double_prime,
        delta=scalarize(lambda xv: -np.asarray(base.phi(xv)),
                        float if base.is_real else complex),
        delta_prime=scalarize(lambda xv: -np.asarray(base.phi_prime(xv)),
                              float if base.is_real else complex),
        chi=base.chi,
        chi_prime=base.chi_prime,
        is_real=base.is_real,
        label=f"antiphase[{base.label}]",
        breakpoints=base.breakpoints,
        phi_prime_scale=base.phi_prime_scale,
        phi_prime_jumps=base.phi_prime_jumps,
        delta_is_zero=False,
        grid=base.grid,
    )


def with_constant_chi(base: GaugeTriple, chi: float) -> GaugeTriple:
    """Replace the base gauge's chi with a constant."""
    chi_c = complex(chi)
    return GaugeTriple(
        phi=base.phi,
        phi_prime=base.phi_prime,
        phi_double_prime=base.phi_double_prime,
        delta=base.delta,
        delta_prime=base.delta_prime,
        chi=constant_field(chi),
        chi_prime=constant_field(0.0),
        is_real=base.is_real and chi_c.imag == 0.0,
        label=base.label + f"+chi({chi:.6g})",
        breakpoints=base.breakpoints,
        phi_prime_scale=base.phi_prime_scale,
        phi_prime_jumps=base.phi_prime_jumps,
        delta_is_zero=base.delta_is_zero,
        diag_vanishes=False,
        grid=base.grid,
    )


def with_tabulated_chi(base: GaugeTriple, positions, values) -> GaugeTriple:
    """Replace the base gauge's chi with a tabulated function; the
    derivative comes from the same monotone-cubic machinery as tabulated
    potentials."""
    chi, chi_p, _ = _pchip_field(positions, values)
    return GaugeTriple(
        phi=base.phi,
        phi_prime=base.phi_prime,
        phi_double_prime=base.phi_double_prime,
        delta=base.delta,
        delta_prime=base.delta_prime,
        chi=chi,
        chi_prime=chi_p,
        is_real=base.is_real,
        label=base.label + "+chi(table)",
        breakpoints=base.breakpoints,
        phi_prime_scale=base.phi_prime_scale,
        phi_prime_jumps=base.phi_prime_jumps,
        delta_is_zero=base.delta_is_zero,
        diag_vanishes=False,
        grid=base.grid,
    )


def _pchip_field(positions, values):
    xs = np.asarray(positions, dtype=float)
    ys = np.asarray(values, dtype=float)
    if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2:
        raise ValueError("need two 1-d arrays of equal length >= 2")
    if not np.all(np.diff(xs) > 0):
        raise ValueError("table positions must be strictly increasing")
    f = PchipInterpolator(xs, ys, extrapolate=True)
    return (scalarize(lambda xv: np.asarray(f(xv))),
            scalarize(lambda xv: np.asarray(f.derivative()(xv))),
            scalarize(lambda xv: np.asarray(f.derivative(2)(xv))))


def gauge_from_tables(phi_table, delta_table=None, chi_table=None,
                      label: str = "tabulated") -> GaugeTriple:
    """User-supplied gauge from two-column tables (position, value).

    Each table is a (positions, values) pair; derivatives come from the
    same monotone-cubic machinery used for tabulated potentials.
    """
    phi, phi_p, phi_pp = _pchip_field(*phi_table)
    if delta_table is not None:
        delta, delta_p, _ = _pchip_field(*delta_table)
        delta_zero = bool(np.all(np.asarray(delta_table[1]) == 0.0))
    else:
        delta, delta_p = constant_field(0.0), constant_field(0.0)
        delta_zero = True
    if chi_table is not None:
        chi, chi_p, _ = _pchip_field(*chi_table)
    else:
        chi, chi_p = constant_field(0.0), constant_field(0.0)
    xs = np.asarray(phi_table[0], dtype=float)
    scale = float(np.max(np.abs(phi_p(xs))))
    return GaugeTriple(
        phi=phi,
        phi_prime=phi_p,
        phi_double_prime=phi_pp,
        delta=delta,
        delta_prime=delta_p,
        chi=chi,
        chi_prime=chi_p,
        is_real=True,
        label=label,
        phi_prime_scale=scale,
        delta_is_zero=delta_zero,
    )


def gauge_from_files(phi_path, delta_path=None, chi_path=None,
                     label: str = "tabulated") -> GaugeTriple:
    """User-supplied gauge from two-column text files, one per function
    (same format as tabulated potentials)."""
    from .potentials import load_table

    return gauge_from_tables(
        load_table(phi_path),
        delta_table=None if delta_path is None else load_table(delta_path),
        chi_table=None if chi_path is None else load_table(chi_path),
        label=label,
    )
