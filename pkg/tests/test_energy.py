import math

import numpy as np
import pytest

from spikelab.params import PhysParams
from spikelab.grids import Field, Pair, RadialGrid, dirichlet_form, inner_l2
from spikelab.energy import (
    boundary_deficit,
    delta_eps,
    delta_eps_envelope,
    eval_E_scalar,
    eval_J,
    grad_J,
    interaction_I,
    pair_norms,
    pohozaev_residual,
)
from spikelab.groundstate import truncated_bubble
from spikelab.nehari import vector_project


def bump_pair(grid: RadialGrid, a1=3.0, a2=2.0, w1=0.8, w2=1.1) -> Pair:
    u1 = grid.field_from_function(lambda r: a1 * np.exp(-((r / w1) ** 2)))
    u2 = grid.field_from_function(lambda r: a2 * np.exp(-((r / w2) ** 2)))
    u1.values[-1] = u2.values[-1] = 0.0
    return Pair(u1, u2)


@pytest.fixture(scope="module")
def grid():
    return RadialGrid(10.0, 1000)


def test_eval_J_zero_pair(grid):
    ps = PhysParams(beta=0.4)
    bd = eval_J(Pair(grid.zeros(), grid.zeros()), ps)
    assert bd.total == 0.0


def test_eval_J_decoupled_second_component(grid):
    ps = PhysParams(beta=0.7)
    u = bump_pair(grid)
    solo = Pair(u.u1, grid.zeros())
    bd = eval_J(solo, ps)
    assert bd.total == pytest.approx(eval_E_scalar(u.u1, 1, ps), rel=1e-14)


def test_eval_J_term_by_term_oracle(grid):
    """Each displayed term recomputed by direct quadrature sums."""
    ps = PhysParams(lambda1=1.2, lambda2=0.8, mu1=1.5, mu2=0.5,
                    alpha1=0.9, alpha2=1.1, beta=-0.3, p=2.7, epsilon=0.9)
    u = bump_pair(grid)
    bd = eval_J(u, ps)
    w = grid.weights
    for i, f in ((1, u.u1), (2, u.u2)):
        v = f.values
        bp = float(np.sum(w * np.abs(v) ** ps.p))
        b4 = float(np.sum(w * v**4))
        got_sub = bd.subcritical_1 if i == 1 else bd.subcritical_2
        got_q = bd.quartic_1 if i == 1 else bd.quartic_2
        assert got_sub == pytest.approx(ps.alpha(i) / ps.p * bp, rel=1e-12)
        assert got_q == pytest.approx(ps.mu(i) / 4.0 * b4, rel=1e-12)
    bc = float(np.sum(w * u.u1.values**2 * u.u2.values**2))
    assert bd.coupling == pytest.approx(ps.beta / 2.0 * bc, rel=1e-12)
    grad_part = dirichlet_form(u.u1, u.u1)
    l2_part = inner_l2(u.u1, u.u1)
    assert 2.0 * bd.h1_half_1 == pytest.approx(ps.epsilon**2 * grad_part + ps.lambda1 * l2_part,
                                               rel=1e-13)


def test_breakdown_reassembly_machine(grid):
    ps = PhysParams(beta=-1.4, mu1=1.0, mu2=1.0, T=5.0)
    bd = eval_J(bump_pair(grid), ps)
    assert bd.reassemble() == pytest.approx(bd.total, rel=1e-15, abs=1e-15)


def test_member_identity_when_cutoff_inactive(grid):
    """On two-constraint members with chi = 1, the level equals
    (p-2)/(2p)||u||^2 + (4-p)/(4p)(sum mu B4 + 2 beta C)."""
    ps = PhysParams(beta=0.15, p=3.0)
    u = bump_pair(grid)
    proj = vector_project(u, ps)
    m = u.scale(proj.t1, proj.t2)
    bd = eval_J(m, ps)
    n = pair_norms(m, ps)
    p = ps.p
    alg = ((p - 2.0) / (2.0 * p) * (n.q1 + n.q2)
           + (4.0 - p) / (4.0 * p) * (ps.mu1 * n.b41 + ps.mu2 * n.b42 + 2.0 * ps.beta * n.bc))
    assert bd.chi_value == 1.0
    assert bd.total == pytest.approx(alg, rel=1e-10)


def test_grad_matches_finite_differences(grid):
    ps = PhysParams(lambda1=1.1, lambda2=0.9, mu1=1.3, mu2=0.6,
                    alpha1=1.0, alpha2=0.8, beta=0.25, p=3.1)
    u = bump_pair(grid)
    g = grad_J(u, ps)
    rng = np.random.default_rng(11)
    t = 1e-4
    worst = 0.0
    for _ in range(20):
        w1 = np.sin(np.pi * grid.r / grid.R) * rng.normal(size=grid.n + 1)
        w2 = np.sin(np.pi * grid.r / grid.R) * rng.normal(size=grid.n + 1)
        for w in (w1, w2):
            for _ in range(8):
                w[1:-1] = 0.25 * w[:-2] + 0.5 * w[1:-1] + 0.25 * w[2:]
            w[0] = w[1]
            w[-1] = 0.0
        v = Pair(Field(grid, w1), Field(grid, w2))
        up = Pair(Field(grid, u.u1.values + t * w1), Field(grid, u.u2.values + t * w2))
        um = Pair(Field(grid, u.u1.values - t * w1), Field(grid, u.u2.values - t * w2))
        fd = (eval_J(up, ps).total - eval_J(um, ps).total) / (2.0 * t)
        pairing = inner_l2(g.u1, v.u1) + inner_l2(g.u2, v.u2)
        worst = max(worst, abs(fd - pairing) / max(abs(fd), 1e-30))
    assert worst <= 1e-4


def test_grad_zero_pair(grid):
    ps = PhysParams()
    g = grad_J(Pair(grid.zeros(), grid.zeros()), ps)
    assert g.u1.linf == 0.0 and g.u2.linf == 0.0


def test_pohozaev_zero_field(grid):
    assert pohozaev_residual(grid.zeros(), 1.0, 1.0, 1.0, 3.0) == 0.0


def test_pohozaev_critical_bubble():
    """The explicit extremal profile solves -Lap u = u^3 exactly."""
    g = RadialGrid(40.0, 8000)
    v = truncated_bubble(1.0, 0.0, 40.0, g)
    res = pohozaev_residual(v, 0.0, 1.0, 0.0, 3.0)
    scale = 32.0 * math.pi**2 / 3.0
    assert abs(res) < 5e-3 * scale


def test_interaction_zero_profile():
    g = RadialGrid(10.0, 500)
    v = g.field_from_function(lambda r: np.exp(-r))
    z = np.zeros_like(g.r)
    out = interaction_I(g.r, v.values, g.r, z, 1.0, 0.5)
    assert out.value == 0.0


def test_interaction_coincident_centers_matches_quartic_mix():
    g = RadialGrid(12.0, 2400)
    v1 = g.field_from_function(lambda r: 2.0 * np.exp(-(r**2)))
    v2 = g.field_from_function(lambda r: 1.5 * np.exp(-1.3 * r**2))
    direct = float(np.sum(g.weights * v1.values**2 * v2.values**2))
    out = interaction_I(g.r, v1.values, g.r, v2.values, 0.0, 1.0, h_quad=6e-3)
    assert out.value == pytest.approx(direct, rel=2e-4)


def test_interaction_exponential_model_slope():
    """log I and center distance: slope -> -2 min(a, b) (inner-scale rates)."""
    g = RadialGrid(60.0, 24000)
    a, b = 1.0, 2.0
    va = g.field_from_function(lambda r: np.exp(-a * r))
    vb = g.field_from_function(lambda r: np.exp(-b * r))
    ds = (20.0, 26.0)
    vals = [interaction_I(g.r, va.values, g.r, vb.values, d, 1.0, pad=25.0, h_quad=0.02).value
            for d in ds]
    slope = (math.log(vals[1]) - math.log(vals[0])) / (ds[1] - ds[0])
    assert slope == pytest.approx(-2.0 * min(a, b), rel=0.05)


def test_interaction_monotone_in_distance():
    g = RadialGrid(20.0, 4000)
    v = g.field_from_function(lambda r: np.exp(-(r**2) / 2.0))
    vals = [interaction_I(g.r, v.values, g.r, v.values, d, 1.0, h_quad=0.02).value
            for d in (0.0, 0.5, 1.0, 2.0)]
    assert all(x > y for x, y in zip(vals, vals[1:]))


def test_delta_eps_forms():
    assert delta_eps(0.0, 0.0, 0.0) == 0.0
    assert delta_eps(0.0, 0.0, 2.5) == 2.5
    assert delta_eps(1.0, 2.0, 3.0) == 6.0
    with pytest.raises(ValueError):
        delta_eps(-1.0, 0.0, 0.0)
    lo, hi = delta_eps_envelope((0.5, 0.7), (1.0, 2.0), 0.2, 1e-8, sigma=0.1)
    assert 0.0 < lo < hi


def test_boundary_deficit_positive_and_shrinking(shoot_cache):
    sh = shoot_cache(1.0, 1.0, 1.0, 3.0, 40.0)
    d_small = boundary_deficit(1.0, 1.0, 1.0, 3.0, 1.0, 6.0, profile=(sh.r, sh.u))
    d_large = boundary_deficit(1.0, 1.0, 1.0, 3.0, 1.0, 12.0, profile=(sh.r, sh.u))
    assert d_small > d_large > 0.0


def test_boundary_deficit_slope_band(shoot_cache):
    """log deficit against 1/eps decays at rate -2 sqrt(lam) R within the
    stated two-sided band (sigma = 0.1)."""
    lam, R = 1.0, 4.0
    sh = shoot_cache(1.0, 1.0, 1.0, 3.0, 40.0)
    eps_list = (0.5, 0.4, 1.0 / 3.0)
    vals = [boundary_deficit(lam, 1.0, 1.0, 3.0, e, R, profile=(sh.r, sh.u))
            for e in eps_list]
    x = np.array([1.0 / e for e in eps_list])
    y = np.log(vals)
    slope = float(np.polyfit(x, y, 1)[0])
    rate = -2.0 * math.sqrt(lam) * R
    assert rate * 1.1 <= slope <= rate * 0.9
