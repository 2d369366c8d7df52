"""Parity of the compiled kernels against the numpy reference."""

import numpy as np
import pytest

from spikelab._kernels import HAVE_COMPILED, _ref

if HAVE_COMPILED:
    from spikelab._kernels import _core as fast
else:  # pragma: no cover - fallback-only environments
    fast = None

needs_ext = pytest.mark.skipif(not HAVE_COMPILED, reason="compiled kernels unavailable")


@pytest.fixture(scope="module")
def radial_setup():
    rng = np.random.default_rng(0)
    n = 257
    h = 0.05
    r = np.arange(n + 1) * h
    mid = ((r[:-1] + r[1:]) / 2.0) ** 3
    edges = np.concatenate(([0.0], (r[:-1] + r[1:]) / 2.0, [r[-1]]))
    cell = np.diff(edges**4 / 4.0)
    u = rng.normal(size=n + 1)
    v = rng.normal(size=n + 1)
    u[-1] = v[-1] = 0.0
    return u, v, mid, cell, h


@needs_ext
def test_radial_apply_parity(radial_setup):
    u, v, mid, cell, h = radial_setup
    a = _ref.radial_apply(u, 1.3, 0.49, mid, cell, h)
    b = fast.radial_apply(u, 1.3, 0.49, mid, cell, h)
    assert np.allclose(a, b, rtol=1e-13, atol=1e-13)


@needs_ext
def test_radial_dirichlet_parity(radial_setup):
    u, v, mid, cell, h = radial_setup
    assert _ref.radial_dirichlet(u, v, mid, h) == pytest.approx(
        fast.radial_dirichlet(u, v, mid, h), rel=1e-13)


@needs_ext
def test_weighted_reductions_parity(radial_setup):
    u, v, mid, cell, h = radial_setup
    w = np.abs(v) + 0.1
    for q in (2.0, 3.1, 4.0):
        assert _ref.wsum_pow(w, u, q) == pytest.approx(fast.wsum_pow(w, u, q), rel=1e-13)
    assert _ref.wdot(w, u, v) == pytest.approx(fast.wdot(w, u, v), rel=1e-13)
    assert _ref.wdot4(w, u, u, v, v) == pytest.approx(fast.wdot4(w, u, u, v, v), rel=1e-13)


@needs_ext
def test_axi_parity():
    rng = np.random.default_rng(1)
    nx, nr = 24, 18
    hx, hr = 0.1, 0.08
    rho = np.arange(nr + 1) * hr
    edges = np.concatenate(([0.0], (rho[:-1] + rho[1:]) / 2.0, [rho[-1]]))
    prho = np.diff(edges**3 / 3.0)
    mrho = ((rho[:-1] + rho[1:]) / 2.0) ** 2
    lxi = np.full(nx + 1, hx)
    lxi[0] = lxi[-1] = hx / 2.0
    interior = np.zeros((nx + 1, nr + 1), dtype=np.uint8)
    interior[1:-1, :-1] = 1
    u = rng.normal(size=(nx + 1, nr + 1))
    v = rng.normal(size=(nx + 1, nr + 1))
    u[~interior.astype(bool)] = 0.0
    v[~interior.astype(bool)] = 0.0
    a = _ref.axi_apply(u, 0.9, 1.21, hx, hr, prho, mrho, interior)
    b = fast.axi_apply(u, 0.9, 1.21, hx, hr, prho, mrho, interior)
    assert np.allclose(a, b, rtol=1e-13, atol=1e-13)
    da = _ref.axi_dirichlet(u, v, hx, hr, prho, mrho, lxi)
    db = fast.axi_dirichlet(u, v, hx, hr, prho, mrho, lxi)
    assert da == pytest.approx(db, rel=1e-13)


@needs_ext
def test_shoot_parity():
    args = (1.0, 1.0, 1.0, 3.0)
    for a in (2.0, 18.0, 40.0):
        ca = _ref.shoot_classify(*args, a, 1e-3, 30.0)
        cb = fast.shoot_classify(*args, a, 1e-3, 30.0)
        assert ca[0] == cb[0]
        assert ca[1] == pytest.approx(cb[1], abs=2e-3)
    ra, ua, wa, sa = _ref.shoot_trace(*args, 18.0, 1e-3, 10.0)
    rb, ub, wb, sb = fast.shoot_trace(*args, 18.0, 1e-3, 10.0)
    assert sa == sb
    assert np.allclose(ua, ub, rtol=1e-12, atol=1e-12)
    assert np.allclose(wa, wb, rtol=1e-12, atol=1e-10)
