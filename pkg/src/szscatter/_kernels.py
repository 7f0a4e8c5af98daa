"""Hot numerical kernels: adaptive embedded stepping and ordered products.

The kernels are plain functions over flat arrays.  By default they are
compiled with numba (njit, cached, GIL released).  Setting the environment
variable ``SZ_SCATTER_NO_NUMBA=1`` before import selects the pure
Python/numpy fallback path instead; the ordered-product kernel then runs a
vectorized numpy variant, while the adaptive steppers run the same source
uncompiled.  ``python -m szscatter.benchmark`` compares the two paths.

Field tables enter as one complex coefficient block of shape
(n_fields, n_intervals, 4) with uniform knots; see _tables.SegmentTable.
Row layout for the coefficient-pair kernels:

    0: phi'            (must stay away from zero)
    1: rho2 - 2 phi' Delta'   (diagonal coefficient)
    2: rho1
    3: rho2
    4: phi + Delta     (accumulated phase)

The direct second-order solver uses a single-row table holding k^2.
"""

import cmath
import os

import numpy as np

try:
    from numba import njit as _njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _njit = None
    _HAVE_NUMBA = False

ENV_FLAG = "SZ_SCATTER_NO_NUMBA"

_DISABLED = os.environ.get(ENV_FLAG, "0").strip().lower() in ("1", "true", "yes")
NUMBA_ACTIVE = _HAVE_NUMBA and not _DISABLED

if NUMBA_ACTIVE:
    def _jit(fn):
        return _njit(cache=True, nogil=True)(fn)
else:
    def _jit(fn):
        return fn


def numba_active() -> bool:
    """True when kernels run through numba in this process."""
    return NUMBA_ACTIVE


# Dormand-Prince 5(4) tableau.
_C2, _C3, _C4, _C5 = 0.2, 0.3, 0.8, 8.0 / 9.0
_A21 = 0.2
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = (19372.0 / 6561.0, -25360.0 / 2187.0,
                          64448.0 / 6561.0, -212.0 / 729.0)
_A61, _A62, _A63, _A64, _A65 = (9017.0 / 3168.0, -355.0 / 33.0,
                                46732.0 / 5247.0, 49.0 / 176.0,
                                -5103.0 / 18656.0)
_B1, _B3, _B4, _B5, _B6 = (35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0,
                           -2187.0 / 6784.0, 11.0 / 84.0)
_E1, _E3, _E4, _E5, _E6, _E7 = (71.0 / 57600.0, -71.0 / 16695.0,
                                71.0 / 1920.0, -17253.0 / 339200.0,
                                22.0 / 525.0, -1.0 / 40.0)

STATUS_OK = 0
STATUS_STEP_UNDERFLOW = 1


@_jit
def _cubic(C, row, i, dx):
    return ((C[row, i, 0] * dx + C[row, i, 1]) * dx + C[row, i, 2]) * dx + C[row, i, 3]


@_jit
def _generator(C, tx0, th, n_tab, x):
    """Evolution-generator entries (g11, g12, g21) at one position;
    g22 = -g11 since the generator is traceless."""
    i = int((x - tx0) / th)
    if i < 0:
        i = 0
    elif i > n_tab - 1:
        i = n_tab - 1
    dx = x - (tx0 + i * th)
    ppr = _cubic(C, 0, i, dx)
    dia = _cubic(C, 1, i, dx)
    rh1 = _cubic(C, 2, i, dx)
    rh2 = _cubic(C, 3, i, dx)
    phi = _cubic(C, 4, i, dx)
    inv2 = 0.5 / ppr
    em = cmath.exp(-2j * phi)
    ep = 1.0 / em
    g11 = 1j * dia * inv2
    g12 = (rh1 + 1j * rh2) * em * inv2
    g21 = (rh1 - 1j * rh2) * ep * inv2
    return g11, g12, g21


@_jit
def rk45_coeffs(C, tx0, th, x_start, stops, a0, b0, tol, hmax, hmin, inv0,
                out_a, out_b):
    """Adaptive 5(4) propagation of the coefficient pair (a, b).

    Integrates from x_start through every stop in order (the final stop is
    the endpoint), storing the state at each stop.  Returns
    (a, b, drift, n_accepted, n_rejected, status) where drift is the
    largest observed deviation of |a|^2 - |b|^2 from inv0.
    """
    n_tab = C.shape[1]
    x = x_start
    a = a0
    b = b0
    dirn = 1.0 if stops[stops.shape[0] - 1] >= x_start else -1.0
    span = abs(stops[stops.shape[0] - 1] - x_start)
    h = dirn * min(hmax, 0.02 * span + 64.0 * hmin)
    drift = 0.0
    n_acc = 0
    n_rej = 0
    status = STATUS_OK
    for k in range(stops.shape[0]):
        xt = stops[k]
        while dirn * (xt - x) > 0.0:
            hs = h
            if abs(hs) > abs(xt - x):
                hs = xt - x
            k1a, k1b = _rhs_coeffs(C, tx0, th, n_tab, x, a, b)
            xa2 = x + _C2 * hs
            ya = a + hs * (_A21 * k1a)
            yb = b + hs * (_A21 * k1b)
            k2a, k2b = _rhs_coeffs(C, tx0, th, n_tab, xa2, ya, yb)
            xa3 = x + _C3 * hs
            ya = a + hs * (_A31 * k1a + _A32 * k2a)
            yb = b + hs * (_A31 * k1b + _A32 * k2b)
            k3a, k3b = _rhs_coeffs(C, tx0, th, n_tab, xa3, ya, yb)
            xa4 = x + _C4 * hs
            ya = a + hs * (_A41 * k1a + _A42 * k2a + _A43 * k3a)
            yb = b + hs * (_A41 * k1b + _A42 * k2b + _A43 * k3b)
            k4a, k4b = _rhs_coeffs(C, tx0, th, n_tab, xa4, ya, yb)
            xa5 = x + _C5 * hs
            ya = a + hs * (_A51 * k1a + _A52 * k2a + _A53 * k3a + _A54 * k4a)
            yb = b + hs * (_A51 * k1b + _A52 * k2b + _A53 * k3b + _A54 * k4b)
            k5a, k5b = _rhs_coeffs(C, tx0, th, n_tab, xa5, ya, yb)
            xa6 = x + hs
            ya = a + hs * (_A61 * k1a + _A62 * k2a + _A63 * k3a + _A64 * k4a
                           + _A65 * k5a)
            yb = b + hs * (_A61 * k1b + _A62 * k2b + _A63 * k3b + _A64 * k4b
                           + _A65 * k5b)
            k6a, k6b = _rhs_coeffs(C, tx0, th, n_tab, xa6, ya, yb)
            a_new = a + hs * (_B1 * k1a + _B3 * k3a + _B4 * k4a + _B5 * k5a
                              + _B6 * k6a)
            b_new = b + hs * (_B1 * k1b + _B3 * k3b + _B4 * k4b + _B5 * k5b
                              + _B6 * k6b)
            k7a, k7b = _rhs_coeffs(C, tx0, th, n_tab, xa6, a_new, b_new)
            err_a = hs * (_E1 * k1a + _E3 * k3a + _E4 * k4a + _E5 * k5a
                          + _E6 * k6a + _E7 * k7a)
            err_b = hs * (_E1 * k1b + _E3 * k3b + _E4 * k4b + _E5 * k5b
                          + _E6 * k6b + _E7 * k7b)
            sc_a = tol + tol * max(abs(a), abs(a_new))
            sc_b = tol + tol * max(abs(b), abs(b_new))
            ra = abs(err_a) / sc_a
            rb = abs(err_b) / sc_b
            err = np.sqrt(0.5 * (ra * ra + rb * rb))
            if err <= 1.0:
                x = x + hs
                a = a_new
                b = b_new
                n_acc += 1
                inv = (a.real * a.real + a.imag * a.imag) \
                    - (b.real * b.real + b.imag * b.imag)
                dev = abs(inv - inv0)
                if dev > drift:
                    drift = dev
            else:
                n_rej += 1
            if err < 1.0e-30:
                fac = 5.0
            else:
                fac = 0.9 * err ** (-0.2)
                if fac > 5.0:
                    fac = 5.0
                elif fac < 0.2:
                    fac = 0.2
            h_mag = abs(hs) * fac
            if h_mag > hmax:
                h_mag = hmax
            if h_mag < hmin:
                if err > 1.0:
                    status = STATUS_STEP_UNDERFLOW
                    return a, b, drift, n_acc, n_rej, status
                h_mag = hmin
            h = dirn * h_mag
        out_a[k] = a
        out_b[k] = b
    return a, b, drift, n_acc, n_rej, status


@_jit
def _rhs_coeffs(C, tx0, th, n_tab, x, a, b):
    g11, g12, g21 = _generator(C, tx0, th, n_tab, x)
    return g11 * a + g12 * b, g21 * a - g11 * b


@_jit
def rk45_wave(C, tx0, th, x_start, stops, p0, q0, tol, hmax, hmin,
              out_p, out_q):
    """Adaptive 5(4) integration of psi'' + k^2 psi = 0 as the pair
    (psi, psi').  Independent of the gauge machinery by construction:
    the only field it reads is k^2 (table row 0)."""
    n_tab = C.shape[1]
    x = x_start
    p = p0
    q = q0
    dirn = 1.0 if stops[stops.shape[0] - 1] >= x_start else -1.0
    span = abs(stops[stops.shape[0] - 1] - x_start)
    h = dirn * min(hmax, 0.02 * span + 64.0 * hmin)
    n_acc = 0
    n_rej = 0
    status = STATUS_OK
    for k in range(stops.shape[0]):
        xt = stops[k]
        while dirn * (xt - x) > 0.0:
            hs = h
            if abs(hs) > abs(xt - x):
                hs = xt - x
            k1p, k1q = _rhs_wave(C, tx0, th, n_tab, x, p, q)
            yp = p + hs * (_A21 * k1p)
            yq = q + hs * (_A21 * k1q)
            k2p, k2q = _rhs_wave(C, tx0, th, n_tab, x + _C2 * hs, yp, yq)
            yp = p + hs * (_A31 * k1p + _A32 * k2p)
            yq = q + hs * (_A31 * k1q + _A32 * k2q)
            k3p, k3q = _rhs_wave(C, tx0, th, n_tab, x + _C3 * hs, yp, yq)
            yp = p + hs * (_A41 * k1p + _A42 * k2p + _A43 * k3p)
            yq = q + hs * (_A41 * k1q + _A42 * k2q + _A43 * k3q)
            k4p, k4q = _rhs_wave(C, tx0, th, n_tab, x + _C4 * hs, yp, yq)
            yp = p + hs * (_A51 * k1p + _A52 * k2p + _A53 * k3p + _A54 * k4p)
            yq = q + hs * (_A51 * k1q + _A52 * k2q + _A53 * k3q + _A54 * k4q)
            k5p, k5q = _rhs_wave(C, tx0, th, n_tab, x + _C5 * hs, yp, yq)
            yp = p + hs * (_A61 * k1p + _A62 * k2p + _A63 * k3p + _A64 * k4p
                           + _A65 * k5p)
            yq = q + hs * (_A61 * k1q + _A62 * k2q + _A63 * k3q + _A64 * k4q
                           + _A65 * k5q)
            k6p, k6q = _rhs_wave(C, tx0, th, n_tab, x + hs, yp, yq)
            p_new = p + hs * (_B1 * k1p + _B3 * k3p + _B4 * k4p + _B5 * k5p
                              + _B6 * k6p)
            q_new = q + hs * (_B1 * k1q + _B3 * k3q + _B4 * k4q + _B5 * k5q
                              + _B6 * k6q)
            k7p, k7q = _rhs_wave(C, tx0, th, n_tab, x + hs, p_new, q_new)
            err_p = hs * (_E1 * k1p + _E3 * k3p + _E4 * k4p + _E5 * k5p
                          + _E6 * k6p + _E7 * k7p)
            err_q = hs * (_E1 * k1q + _E3 * k3q + _E4 * k4q + _E5 * k5q
                          + _E6 * k6q + _E7 * k7q)
            sc_p = tol + tol * max(abs(p), abs(p_new))
            sc_q = tol + tol * max(abs(q), abs(q_new))
            rp = abs(err_p) / sc_p
            rq = abs(err_q) / sc_q
            err = np.sqrt(0.5 * (rp * rp + rq * rq))
            if err <= 1.0:
                x = x + hs
                p = p_new
                q = q_new
                n_acc += 1
            else:
                n_rej += 1
            if err < 1.0e-30:
                fac = 5.0
            else:
                fac = 0.9 * err ** (-0.2)
                if fac > 5.0:
                    fac = 5.0
                elif fac < 0.2:
                    fac = 0.2
            h_mag = abs(hs) * fac
            if h_mag > hmax:
                h_mag = hmax
            if h_mag < hmin:
                if err > 1.0:
                    status = STATUS_STEP_UNDERFLOW
                    return p, q, n_acc, n_rej, status
                h_mag = hmin
            h = dirn * h_mag
        out_p[k] = p
        out_q[k] = q
    return p, q, n_acc, n_rej, status


@_jit
def _rhs_wave(C, tx0, th, n_tab, x, p, q):
    i = int((x - tx0) / th)
    if i < 0:
        i = 0
    elif i > n_tab - 1:
        i = n_tab - 1
    dx = x - (tx0 + i * th)
    k2 = _cubic(C, 0, i, dx)
    return q, -k2 * p


@_jit
def _ordered_product_scalar(C, tx0, th, xa, xb, nsteps):
    """Ordered product of per-step exponentials of the generator frozen
    at step midpoints (second-order product integration).  Later
    positions multiply on the left."""
    n_tab = C.shape[1]
    h = (xb - xa) / nsteps
    e11 = 1.0 + 0.0j
    e12 = 0.0 + 0.0j
    e21 = 0.0 + 0.0j
    e22 = 1.0 + 0.0j
    for i in range(nsteps):
        xm = xa + (i + 0.5) * h
        g11, g12, g21 = _generator(C, tx0, th, n_tab, xm)
        # Closed-form exponential of the traceless step matrix h*G:
        # exp = cosh(z) I + (sinh(z)/z) h G with z^2 = h^2 (g11^2 + g12 g21).
        z2 = (g11 * g11 + g12 * g21) * (h * h)
        z = cmath.sqrt(z2)
        if abs(z) < 1.0e-5:
            s = 1.0 + z2 / 6.0 * (1.0 + z2 / 20.0)
            ch = 1.0 + z2 / 2.0 * (1.0 + z2 / 12.0)
        else:
            ch = cmath.cosh(z)
            s = cmath.sinh(z) / z
        m11 = ch + s * h * g11
        m12 = s * h * g12
        m21 = s * h * g21
        m22 = ch - s * h * g11
        f11 = m11 * e11 + m12 * e21
        f12 = m11 * e12 + m12 * e22
        f21 = m21 * e11 + m22 * e21
        f22 = m21 * e12 + m22 * e22
        e11 = f11
        e12 = f12
        e21 = f21
        e22 = f22
    return e11, e12, e21, e22


def _ordered_product_numpy(C, tx0, th, xa, xb, nsteps):
    """Vectorized fallback: batch-evaluate all step exponentials with
    numpy, then accumulate the ordered 2x2 product in Python."""
    n_tab = C.shape[1]
    h = (xb - xa) / nsteps
    xm = xa + (np.arange(nsteps) + 0.5) * h
    idx = np.clip(((xm - tx0) / th).astype(np.int64), 0, n_tab - 1)
    dx = xm - (tx0 + idx * th)

    def field(row):
        c = C[row, idx]
        return ((c[:, 0] * dx + c[:, 1]) * dx + c[:, 2]) * dx + c[:, 3]

    ppr = field(0)
    dia = field(1)
    rh1 = field(2)
    rh2 = field(3)
    phi = field(4)
    inv2 = 0.5 / ppr
    em = np.exp(-2j * phi)
    g11 = 1j * dia * inv2
    g12 = (rh1 + 1j * rh2) * em * inv2
    g21 = (rh1 - 1j * rh2) / em * inv2
    z2 = (g11 * g11 + g12 * g21) * (h * h)
    z = np.sqrt(z2)
    small = np.abs(z) < 1.0e-5
    ch = np.where(small, 1.0 + z2 / 2.0 * (1.0 + z2 / 12.0), np.cosh(z))
    s = np.where(small, 1.0 + z2 / 6.0 * (1.0 + z2 / 20.0),
                 np.sinh(np.where(small, 1.0, z)) / np.where(small, 1.0, z))
    m11 = ch + s * h * g11
    m12 = s * h * g12
    m21 = s * h * g21
    m22 = ch - s * h * g11
    e11 = 1.0 + 0.0j
    e12 = 0.0 + 0.0j
    e21 = 0.0 + 0.0j
    e22 = 1.0 + 0.0j
    for i in range(nsteps):
        a11 = m11[i]
        a12 = m12[i]
        a21 = m21[i]
        a22 = m22[i]
        f11 = a11 * e11 + a12 * e21
        f12 = a11 * e12 + a12 * e22
        f21 = a21 * e11 + a22 * e21
        f22 = a21 * e12 + a22 * e22
        e11, e12, e21, e22 = f11, f12, f21, f22
    return e11, e12, e21, e22


if NUMBA_ACTIVE:
    ordered_product = _ordered_product_scalar
else:
    ordered_product = _ordered_product_numpy


def warm_up() -> None:
    """Trigger JIT compilation of every kernel on a tiny problem so later
    timings measure stepping, not compilation."""
    C = np.zeros((5, 2, 4), dtype=np.complex128)
    C[0, :, 3] = 1.0  # phi' = 1
    stops = np.array([1.0])
    out_a = np.empty(1, dtype=np.complex128)
    out_b = np.empty(1, dtype=np.complex128)
    rk45_coeffs(C, 0.0, 0.5, 0.0, stops, 1.0 + 0j, 0.0 + 0j, 1e-8, 1.0,
                1e-15, 1.0, out_a, out_b)
    ordered_product(C, 0.0, 0.5, 0.0, 1.0, 4)
    K = np.zeros((1, 2, 4), dtype=np.complex128)
    K[0, :, 3] = 1.0
    out_p = np.empty(1, dtype=np.complex128)
    out_q = np.empty(1, dtype=np.complex128)
    rk45_wave(K, 0.0, 0.5, 0.0, stops, 1.0 + 0j, 1.0j, 1e-8, 1.0, 1e-15,
              out_p, out_q)
