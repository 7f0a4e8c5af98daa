"""Kernel backend checks: numba path, numpy fallback, and agreement."""

import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from szscatter import _kernels

FALLBACK_SNIPPET = """\
import json, math
import szscatter as sz
from szscatter import _kernels
assert not _kernels.numba_active()
p = sz.square_barrier(1.0, 1.0)
e = sz.EnergySpec(2.0)
grid = sz.truncate_domain(p, e)
w = sz.wavenumber_field(p, e)
g = sz.gauge_constant(w.k_left)
r = sz.rho_pair(g, w)
amp = sz.scattering_amplitudes(p, e, g, 1e-12, grid=grid)
E = sz.transfer_matrix(g, r, grid.x_min, grid.x_max, tol=1e-9, grid=grid)
print(json.dumps({
    "transmission": amp.transmission,
    "e00re": E.entries[0, 0].real,
    "e00im": E.entries[0, 0].imag,
}))
"""


def test_numba_is_default_backend():
    if os.environ.get(_kernels.ENV_FLAG, "0").lower() in ("1", "true", "yes"):
        pytest.skip("fallback explicitly requested in this environment")
    assert _kernels.numba_active()


def test_fallback_subprocess_matches_numba():
    import szscatter as sz

    p = sz.square_barrier(1.0, 1.0)
    e = sz.EnergySpec(2.0)
    grid = sz.truncate_domain(p, e)
    w = sz.wavenumber_field(p, e)
    g = sz.gauge_constant(w.k_left)
    r = sz.rho_pair(g, w)
    amp = sz.scattering_amplitudes(p, e, g, 1e-12, grid=grid)
    E = sz.transfer_matrix(g, r, grid.x_min, grid.x_max, tol=1e-9, grid=grid)

    env = dict(os.environ)
    env[_kernels.ENV_FLAG] = "1"
    out = subprocess.run([sys.executable, "-c", FALLBACK_SNIPPET], env=env,
                         capture_output=True, text=True, check=True)
    got = json.loads(out.stdout.strip().splitlines()[-1])
    assert got["transmission"] == pytest.approx(amp.transmission, abs=1e-12)
    assert got["e00re"] == pytest.approx(E.entries[0, 0].real, abs=1e-9)
    assert got["e00im"] == pytest.approx(E.entries[0, 0].imag, abs=1e-9)


def test_vectorized_product_matches_scalar_kernel():
    # Same table, same step count: the numpy fallback and the scalar
    # (possibly jitted) kernel must produce the same ordered product.
    rng = np.random.default_rng(3)
    n_int = 16
    C = np.zeros((5, n_int, 4), dtype=np.complex128)
    C[0, :, 3] = 1.0 + 0.2 * rng.random(n_int)          # phi' > 0
    C[1, :, 3] = rng.normal(size=n_int)                 # diagonal
    C[2, :, 3] = rng.normal(size=n_int)                 # rho1
    C[3, :, 3] = rng.normal(size=n_int)                 # rho2
    C[4, :, 2] = 1.0                                    # phase ~ x
    a = _kernels._ordered_product_numpy(C, 0.0, 0.125, 0.0, 2.0, 333)
    b = _kernels._ordered_product_scalar(C, 0.0, 0.125, 0.0, 2.0, 333)
    for u, v in zip(a, b):
        assert complex(u) == pytest.approx(complex(v), abs=1e-13)


def test_step_exponential_is_unimodular():
    C = np.zeros((5, 4, 4), dtype=np.complex128)
    C[0, :, 3] = 1.0
    C[1, :, 3] = 0.7
    C[2, :, 3] = -0.3
    C[3, :, 3] = 1.1
    C[4, :, 2] = 1.0
    e11, e12, e21, e22 = _kernels.ordered_product(C, 0.0, 0.5, 0.0, 2.0, 64)
    det = e11 * e22 - e12 * e21
    assert complex(det) == pytest.approx(1.0, abs=1e-12)


def test_warm_up_runs():
    _kernels.warm_up()


def test_benchmark_inner_quick():
    from szscatter import benchmark

    report = benchmark._time_inner(quick=True)
    assert set(report["timings"]) == {
        "evolve sech^2 well (adaptive RK)",
        "transfer matrix (ordered product)",
        "direct reference integration",
    }
    assert all(t > 0 for t in report["timings"].values())
