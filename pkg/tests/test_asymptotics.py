import io

import numpy as np
import pytest

from spikelab.params import PhysParams
from spikelab.grids import RadialGrid, resample_from_profile
from spikelab.asymptotics import (
    EpsSweepPlan,
    SpikeTraceEntry,
    decay_fit,
    energy_limit_check,
    interaction_slope,
    run_sweep,
    write_trace_csv,
)
from spikelab.groundstate import SolveOptions
from spikelab.placement import Domain4

SYM = dict(lambda1=1.0, lambda2=1.0, mu1=1.0, mu2=1.0, alpha1=1.0, alpha2=1.0, p=3.0)


def test_plan_validation():
    dom = Domain4.ball(radius=1.0)
    ps = PhysParams(beta=0.1, **SYM)
    with pytest.raises(ValueError):
        EpsSweepPlan(eps_list=(0.4, 0.3), domain=dom, params=ps)
    with pytest.raises(ValueError):
        EpsSweepPlan(eps_list=(0.3, 0.4, 0.2), domain=dom, params=ps)


def test_decay_fit_synthetic_rate():
    g = RadialGrid(10.0, 2000)
    f = g.field_from_function(lambda r: np.exp(-2.0 * r))
    fit = decay_fit(f, np.zeros(4), (2.0, 6.0))
    assert fit.rate == pytest.approx(2.0, abs=1e-3)


def test_decay_fit_window_shift_stability():
    g = RadialGrid(10.0, 2000)
    f = g.field_from_function(lambda r: np.exp(-1.5 * r) * (1 + 0.05 * np.sin(3 * r)))
    f1 = decay_fit(f, np.zeros(4), (3.0, 6.0))
    f2 = decay_fit(f, np.zeros(4), (3.0 + g.h, 6.0 + g.h))
    assert f1.rate == pytest.approx(f2.rate, rel=0.02)


def test_decay_fit_scalar_state_band(shoot_cache):
    """Entire ground-state rate inside the sigma = 0.1 band around
    sqrt(lam) when fitted over a far window."""
    sh = shoot_cache(1.0, 1.0, 1.0, 3.0, 40.0)
    g = RadialGrid(40.0, 8000)
    f = resample_from_profile(sh.r, sh.u, g)
    fit = decay_fit(f, np.zeros(4), (16.0, 24.0))
    assert 0.9 <= fit.rate <= 1.1


def test_decay_fit_refuses_thin_windows():
    g = RadialGrid(5.0, 100)
    f = g.field_from_function(lambda r: np.where(r < 2.0, np.exp(-r), 0.0))
    with pytest.raises(ValueError):
        decay_fit(f, np.zeros(4), (3.0, 4.0))


def test_energy_limit_check_synthetic():
    entries = [SpikeTraceEntry(eps=e, ok=True, scaled_energy=10.0 + e**2)
               for e in (0.4, 0.2, 0.1)]
    rep = energy_limit_check(entries, 10.0)
    assert rep.monotone and rep.passed
    assert rep.empirical_order == pytest.approx(2.0, rel=0.05)
    with pytest.raises(ValueError):
        energy_limit_check(entries, -1.0)


def test_trace_csv_roundtrip_shape():
    entries = [SpikeTraceEntry(eps=0.4, ok=True, p1=np.zeros(4), p2=np.zeros(4),
                               scaled_energy=1.0)]
    buf = io.StringIO()
    write_trace_csv(buf, entries)
    lines = buf.getvalue().strip().split("\n")
    assert len(lines) == 2
    assert lines[0].startswith("eps,ok")


def test_small_radial_sweep_and_warm_start(sweep_reference):
    """Warm and cold starts agree on the final levels (covered regime)."""
    dom = Domain4.ball(radius=1.0)
    base = dict(eps_list=(0.4, 0.32, 0.2), domain=dom, params=sweep_reference.params,
                nodes_per_eps=sweep_reference.nodes_per_eps,
                solve=SolveOptions(max_iter=600, tol=1e-10),
                limit_pair=sweep_reference.limit_pair,
                init_width_hat=0.15, init_amplitude=16.0)
    cold = run_sweep(EpsSweepPlan(warm_start=False, **base))
    warm = run_sweep(EpsSweepPlan(warm_start=True, **base))
    assert all(e.ok for e in cold + warm)
    for c, w in zip(cold, warm):
        assert c.scaled_energy == pytest.approx(w.scaled_energy, rel=1e-6)
    # failures are recorded, not raised: poison one entry via a tiny grid
    bad = EpsSweepPlan(eps_list=(0.4, 0.3, 0.2), domain=Domain4.box([(0, 1)] * 4),
                       params=sweep_reference.params)
    entries = run_sweep(bad)
    assert all(not e.ok and e.message for e in entries)


def test_interaction_slope_matches_rate(shoot_cache):
    sh = shoot_cache(1.0, 1.0, 1.0, 3.0, 70.0)
    d = 1.0
    fit = interaction_slope(sh, sh, d, tuple(d / D for D in (18.0, 22.0, 27.0)))
    assert fit.slope == pytest.approx(-2.0 * d, rel=0.1)
