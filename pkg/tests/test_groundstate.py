import math
import warnings

import numpy as np
import pytest

from spikelab.params import PhysParams, SOBOLEV_RATIO_4D
from spikelab.grids import RadialGrid, integrate_power, h1_product
from spikelab.energy import pair_norms
from spikelab.groundstate import (
    A1,
    InitSpec,
    SolveOptions,
    UnsupportedRegime,
    k_system,
    shooting_oracle,
    sobolev_constant,
    solve_scalar_ground,
    solve_system_ground,
    threshold_check,
    truncated_bubble,
    two_bump_level,
    LimitConstants,
)
from spikelab.nehari import residuals

SYM = dict(lambda1=1.0, lambda2=1.0, mu1=1.0, mu2=1.0, alpha1=1.0, alpha2=1.0, p=3.0)


# ----------------------------------------------------------------------
# bubble and embedding ratio
# ----------------------------------------------------------------------

def test_bubble_center_value_and_support():
    g = RadialGrid(1.0, 2000)
    sigma = 0.07
    v = truncated_bubble(sigma, 0.0, 1.0, g)
    assert v.values[0] == pytest.approx(2.0 * math.sqrt(2.0) / sigma, rel=1e-12)
    inside = g.r <= 0.5
    outside = g.r >= 1.0 - 1e-12
    assert np.all(v.values[outside] == 0.0)
    prof = 2.0 * math.sqrt(2.0) * sigma / (sigma**2 + g.r**2)
    assert np.allclose(v.values[inside], prof[inside])


def test_bubble_quadratic_log_mass():
    """L2 mass scales like sigma^2 |log sigma| (bounded ratio across scales)."""
    g = RadialGrid(1.0, 40000)
    ratios = []
    for s in (0.2, 0.1, 0.05):
        v = truncated_bubble(s, 0.0, 1.0, g)
        m2 = integrate_power(v, 2.0)
        ratios.append(m2 / (s * s * abs(math.log(s))))
    assert max(ratios) < 2.5 * min(ratios)


def test_bubble_geometry_guard():
    g = RadialGrid(1.0, 100)
    with pytest.raises(ValueError):
        truncated_bubble(0.1, 0.0, 2.0, g)


def test_sobolev_scale_invariance():
    """Doubling sigma and the cutoff radius together leaves the ratio
    unchanged (dilation invariance at the critical exponent)."""
    from spikelab.grids import dirichlet_form

    vals = []
    for s, R in ((0.05, 1.0), (0.1, 2.0)):
        g = RadialGrid(R, 30000)
        v = truncated_bubble(s, 0.0, R, g)
        vals.append(dirichlet_form(v, v) / math.sqrt(integrate_power(v, 4.0)))
    assert vals[0] == pytest.approx(vals[1], rel=1e-7)


# ----------------------------------------------------------------------
# shooting
# ----------------------------------------------------------------------

def test_shooting_monotone_profile(shoot_cache):
    sh = shoot_cache(1.0, 1.0, 1.0, 3.0, 20.0)
    assert np.all(np.diff(sh.u) <= 1e-12)
    assert sh.bracket_width < 1e-12


def test_shooting_far_tail_slope(shoot_cache):
    sh = shoot_cache(1.0, 1.0, 1.0, 3.0, 160.0)
    msk = (sh.r >= 80.0) & (sh.r <= 120.0)
    slope = float(np.polyfit(sh.r[msk], np.log(sh.u[msk]), 1)[0])
    assert -slope == pytest.approx(1.0, rel=0.02)


def test_shooting_explicit_bracket_failure():
    with pytest.raises(RuntimeError, match="bracket"):
        shooting_oracle(2.0, 1.0, 0.5, 2.5, r_max=10.0, a_bracket=(1e-3, 1e3))


# ----------------------------------------------------------------------
# scalar solves
# ----------------------------------------------------------------------

def test_scalar_flow_vs_shooting(scalar_cases):
    for case in scalar_cases:
        rel = abs(case.grid_result.energy - case.shoot.energy) / abs(case.shoot.energy)
        assert rel <= 1e-4, (case.lam, case.mu, case.alpha, case.p, rel)


def test_scalar_levels_below_critical_threshold(scalar_cases):
    s2 = SOBOLEV_RATIO_4D**2
    for case in scalar_cases:
        for d in (case.grid_result.energy, case.shoot.energy):
            assert 0.0 < d < s2 / (4.0 * case.mu)


def test_scalar_member_bounds(scalar_cases):
    """Constraint-set member bounds: B4 < p S^2/((4-p) mu) and
    ||u||^2 < p S^2/(2(p-2) mu) (unit eps)."""
    s2 = SOBOLEV_RATIO_4D**2
    for case in scalar_cases:
        u = case.grid_result.field
        b4 = integrate_power(u, 4.0)
        q = h1_product(u, u, case.lam, 1.0)
        assert b4 < case.p * s2 / ((4.0 - case.p) * case.mu)
        assert q < case.p * s2 / (2.0 * (case.p - 2.0) * case.mu)


def test_scalar_profile_matches_shooting_shape(scalar_cases):
    case = scalar_cases[0]
    u = case.grid_result.field
    grid = case.grid
    ref = np.interp(grid.r, case.shoot.r, case.shoot.u)
    err = np.max(np.abs(u.values - ref)) / np.max(ref)
    assert err < 1e-3


def test_scalar_solver_rejects_alpha_zero():
    g = RadialGrid(8.0, 200)
    with pytest.raises(ValueError):
        solve_scalar_ground(1, PhysParams(alpha1=0.0, beta=0.0), g)


def test_energy_refinement_order():
    """Converged levels at h and h/2 differ by O(h^2)."""
    ps = PhysParams(beta=0.0, **SYM)
    levels = []
    for n in (1200, 2400, 4800):
        g = RadialGrid(16.0, n)
        r = solve_scalar_ground(1, ps, g, SolveOptions(max_iter=400, tol=1e-10,
                                                       init=InitSpec(width=0.2, amplitude=12.0)))
        levels.append(r.energy)
    d1 = abs(levels[1] - levels[0])
    d2 = abs(levels[2] - levels[1])
    assert 2.8 < d1 / d2 < 5.5  # ratio 4 for clean O(h^2)


# ----------------------------------------------------------------------
# system solves
# ----------------------------------------------------------------------

def test_system_beta_zero_decouples(system_family):
    ps = PhysParams(beta=0.0, **SYM)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = solve_system_ground(ps, system_family.grid,
                                  SolveOptions(max_iter=400, tol=1e-9,
                                               init=InitSpec(width=0.2, amplitude=12.0)))
    assert res.energy == pytest.approx(2.0 * system_family.d1.energy, rel=1e-6)


def test_system_attractive_below_decoupled(system_family):
    assert system_family.sys_pos.energy < 2.0 * system_family.d1.energy - 1e-3
    assert not system_family.sys_pos.semi_trivial
    assert system_family.sys_pos.converged


def test_system_nehari_residuals_small(system_family):
    res = system_family.sys_pos
    n = pair_norms(res.pair, system_family.params_pos)
    r = residuals(res.pair, system_family.params_pos)
    assert abs(r.g1) <= 1e-9 * n.q1
    assert abs(r.g2) <= 1e-9 * n.q2


def test_system_ray_path():
    ps = PhysParams(beta=3.0, **SYM)
    g = RadialGrid(14.0, 6000)
    res = solve_system_ground(ps, g, SolveOptions(max_iter=400, tol=1e-9,
                                                  init=InitSpec(width=0.2, amplitude=8.0)))
    assert res.method.endswith("ray")
    assert res.converged and not res.semi_trivial


def test_system_unsupported_band():
    ps = PhysParams(beta=1.0, **SYM)  # between 0.2*sqrt(mu1 mu2) and 2*max(mu)
    g = RadialGrid(8.0, 200)
    with pytest.raises(UnsupportedRegime):
        solve_system_ground(ps, g)


# ----------------------------------------------------------------------
# closed forms
# ----------------------------------------------------------------------

def test_k_system_reference_values():
    assert k_system(1.0, 1.0, 0.0) == (1.0, 1.0)
    k1, k2 = k_system(1.0, 1.0, 0.5)
    assert k1 == pytest.approx(2.0 / 3.0) and k2 == pytest.approx(2.0 / 3.0)
    k1, k2 = k_system(2.0, 3.0, 1.0)
    assert k1 == pytest.approx(0.4) and k2 == pytest.approx(0.2)


def test_k_system_residuals_exact():
    for mu1, mu2, beta in ((1.0, 1.0, 0.5), (2.0, 3.0, 1.0), (0.7, 1.9, -0.4)):
        k1, k2 = k_system(mu1, mu2, beta)
        assert abs(mu1 * k1 + beta * k2 - 1.0) < 1e-12
        assert abs(mu2 * k2 + beta * k1 - 1.0) < 1e-12


def test_k_system_singular():
    with pytest.raises(ValueError):
        k_system(1.0, 4.0, 2.0)


def test_A1_closed_forms_and_continuity():
    S = SOBOLEV_RATIO_4D
    ps_neg = PhysParams(mu1=1.0, mu2=1.0, beta=-0.7)
    assert A1(ps_neg, S) == pytest.approx(S * S / 2.0)
    ps_mid = PhysParams(mu1=1.0, mu2=1.0, beta=0.5)
    assert A1(ps_mid, S) == pytest.approx(S * S / 3.0, rel=1e-12)
    tiny = PhysParams(mu1=1.3, mu2=0.9, beta=1e-12)
    left = A1(PhysParams(mu1=1.3, mu2=0.9, beta=-1e-12), S)
    assert abs(A1(tiny, S) - left) < 1e-10


def test_A1_unsupported_band():
    with pytest.raises(UnsupportedRegime):
        A1(PhysParams(mu1=1.0, mu2=2.0, beta=1.5), SOBOLEV_RATIO_4D)


def test_threshold_check_decoupled_sanity(system_family):
    """beta = 0 control: c = d1 + d2 sits below d1 + S^2/(4 mu2) because
    d2 < S^2/(4 mu2); with the beta = 0 closed form for A1 all gaps open."""
    se = sobolev_constant()
    d1 = system_family.d1.energy
    ps0 = PhysParams(beta=0.0, **SYM)
    consts = LimitConstants(S=se.S, d1=d1, d2=d1, A1=A1(ps0, se.S),
                            k1=1.0, k2=1.0)
    rep = threshold_check(2.0 * d1, d1, d1, consts, ps0)
    assert rep.gap_d1 > 0.0 and rep.gap_d2 > 0.0
    assert rep.passed


def test_threshold_check_covered_regime(system_family):
    """The attractive-coupling level clears every compactness threshold."""
    se = sobolev_constant()
    d1 = system_family.d1.energy
    ps = system_family.params_pos
    k1, k2 = k_system(ps.mu1, ps.mu2, ps.beta)
    consts = LimitConstants(S=se.S, d1=d1, d2=d1, A1=A1(ps, se.S), k1=k1, k2=k2)
    rep = threshold_check(system_family.B_pos, d1, d1, consts, ps)
    assert rep.min_gap > 0.0
    assert rep.passed


def test_two_bump_levels_decrease(shoot_cache):
    sh = shoot_cache(1.0, 1.0, 1.0, 3.0, 26.0)
    ps = PhysParams(beta=-0.5, **SYM)
    pts = [two_bump_level(sh, sh, R, ps) for R in (2.0, 4.0, 6.0)]
    es = [q.energy for q in pts]
    assert es[0] > es[1] > es[2]
    assert es[2] == pytest.approx(2.0 * sh.energy, rel=1e-6)
