import math

import numpy as np
import pytest

from spikelab.placement import (
    Domain4,
    MaximizeOptions,
    PointPair,
    dist_boundary,
    lambda_set_sample,
    maximize_dist,
    maximize_phi,
    phi,
    phi_star,
)

BALL = Domain4.ball(radius=1.0)
BOX = Domain4.box([(0.0, 1.0)] * 4)
SHELL = Domain4.shell(r_in=1.0, r_out=3.0)


def test_dist_boundary_closed_forms():
    assert dist_boundary(Domain4.ball(radius=2.0), np.zeros(4)) == 2.0
    assert dist_boundary(BALL, [0.3, 0, 0, 0]) == pytest.approx(0.7)
    assert dist_boundary(BOX, [0.2, 0.5, 0.5, 0.5]) == pytest.approx(0.2)
    assert dist_boundary(SHELL, [2.0, 0, 0, 0]) == pytest.approx(1.0)
    assert dist_boundary(BALL, [2.0, 0, 0, 0]) == 0.0  # outside clamps to zero


def test_maximize_dist_exact():
    r = maximize_dist(BALL)
    assert r.value == 1.0 and np.allclose(r.optimizer, 0.0)
    r = maximize_dist(BOX)
    assert r.value == pytest.approx(0.5) and np.allclose(r.optimizer, 0.5)
    r = maximize_dist(SHELL)
    assert r.value == pytest.approx(1.0)
    assert np.linalg.norm(r.optimizer) == pytest.approx(2.0)
    for dom in (BALL, BOX, SHELL):
        rr = maximize_dist(dom)
        assert abs(rr.gap) < 1e-6


def test_phi_reference_values():
    pp = PointPair(np.array([1 / 3, 0, 0, 0]), np.array([-1 / 3, 0, 0, 0]))
    assert phi(pp, 1.0, 1.0, BALL) == pytest.approx(2.0 / 3.0)
    assert phi(PointPair(np.zeros(4), np.zeros(4)), 2.0, 1.0, BALL) == 0.0


def test_phi_candidate_enumeration():
    """min over both couplings of separation and own-boundary terms."""
    p1 = np.array([0.5, 0, 0, 0])
    p2 = np.array([-0.2, 0, 0, 0])
    pp = PointPair(p1, p2)
    lam1, lam2 = 4.0, 1.0
    sep = 0.7
    d1, d2 = 0.5, 0.8
    expected = min(2.0 * sep, 2.0 * d1, 1.0 * sep, 1.0 * d2)
    assert phi(pp, lam1, lam2, BALL) == pytest.approx(expected)


def test_phi_isometry_invariance():
    rng = np.random.default_rng(3)
    for _ in range(5):
        q, _ = np.linalg.qr(rng.normal(size=(4, 4)))
        p1, p2 = BALL.random_points(rng, 2)
        a = phi(PointPair(p1, p2), 1.3, 0.8, BALL)
        b = phi(PointPair(q @ p1, q @ p2), 1.3, 0.8, BALL)
        assert a == pytest.approx(b, rel=1e-12)
    perm = [2, 0, 3, 1]
    for _ in range(5):
        p1, p2 = BOX.random_points(rng, 2)
        a = phi(PointPair(p1, p2), 1.0, 1.0, BOX)
        b = phi(PointPair(p1[perm], p2[perm]), 1.0, 1.0, BOX)
        assert a == pytest.approx(b, rel=1e-12)


def test_phi_star_equal_weights_and_lambda_collapse():
    rng = np.random.default_rng(8)
    p1, p2 = BALL.random_points(rng, 2)
    pp = PointPair(p1, p2)
    lam1, lam2 = 2.0, 0.5
    v = phi_star(pp, 1.0, 1.0, lam1, lam2, BALL)
    wfac = (math.sqrt(lam1) + math.sqrt(lam2)) / 2.0
    sep = np.linalg.norm(p1 - p2)
    assert v == pytest.approx(min(wfac * sep,
                                  math.sqrt(lam1) * dist_boundary(BALL, p1),
                                  math.sqrt(lam2) * dist_boundary(BALL, p2)))
    lam = 1.7
    assert phi_star(pp, 0.3, 2.1, lam, lam, BALL) == pytest.approx(phi(pp, lam, lam, BALL))


def test_phi_star_weight_limit_recovers_phi_candidates():
    rng = np.random.default_rng(19)
    lam1, lam2 = 2.0, 0.5
    worst = 0.0
    for _ in range(100):
        p1, p2 = BALL.random_points(rng, 2)
        pp = PointPair(p1, p2)
        sep = float(np.linalg.norm(p1 - p2))
        lim = min(math.sqrt(lam1) * sep,
                  math.sqrt(lam1) * dist_boundary(BALL, p1),
                  math.sqrt(lam2) * dist_boundary(BALL, p2))
        v = phi_star(pp, 1.0, 1e-13, lam1, lam2, BALL)
        worst = max(worst, abs(v - lim))
    assert worst <= 1e-10


def test_phi_star_rejects_bad_weights():
    pp = PointPair(np.zeros(4), np.ones(4) * 0.1)
    with pytest.raises(ValueError):
        phi_star(pp, 0.0, 1.0, 1.0, 1.0, BALL)


def test_lambda_set_segment_point_and_residual():
    big = Domain4.ball(radius=5.0)
    pair = PointPair(np.zeros(4), np.array([3.0, 0, 0, 0]))
    pts, empty = lambda_set_sample(pair, 2.0, 1.0, big, count=24)
    assert not empty
    assert pts[0][0] == pytest.approx(1.0)  # splits 3 as 1 : 2
    for x in pts:
        assert abs(2.0 * np.linalg.norm(x - pair.p1) - np.linalg.norm(x - pair.p2)) < 1e-9


def test_lambda_set_equal_weights_midplane():
    big = Domain4.ball(radius=5.0)
    pair = PointPair(np.array([-1.0, 0, 0, 0]), np.array([1.0, 0, 0, 0]))
    pts, empty = lambda_set_sample(pair, 1.0, 1.0, big, count=24)
    assert not empty
    assert pts[0][0] == pytest.approx(0.0, abs=1e-12)
    for x in pts:
        assert abs(x[0]) < 1e-10


def test_lambda_set_empty_flag():
    # both points deep inside the hole: the weighted bisector is a small
    # sphere around p2 that misses the shell entirely
    tiny = Domain4.shell(r_in=0.9, r_out=1.0)
    pair = PointPair(np.array([0.2, 0, 0, 0]), np.array([-0.2, 0, 0, 0]))
    pts, empty = lambda_set_sample(pair, 1.0, 100.0, tiny, count=8)
    assert empty and pts == []


def test_maximize_phi_ball_matches_analytic_value(criterion):
    import time

    t0 = time.perf_counter()
    res = maximize_phi(BALL, 1.0, 1.0)
    assert abs(res.value - 2.0 / 3.0) <= 1e-3
    assert abs(res.value - res.oracle_value) <= 1e-3
    # dilation scaling: a c-times larger ball scales the level by c
    res2 = maximize_phi(Domain4.ball(radius=2.0), 1.0, 1.0,
                        MaximizeOptions(starts=16))
    assert res2.oracle_value == pytest.approx(2.0 * res.oracle_value, rel=1e-6)


def test_maximize_phi_box_and_shell_match_oracle():
    rb = maximize_phi(BOX, 1.0, 1.0)
    assert abs(rb.value - rb.oracle_value) <= 1e-3
    assert rb.oracle_value == pytest.approx(0.4, abs=1e-4)
    rs = maximize_phi(SHELL, 1.0, 1.0)
    assert abs(rs.value - rs.oracle_value) <= 1e-3
    assert rs.oracle_value == pytest.approx(1.0, abs=1e-4)


def test_maximize_phi_asymmetric_couplings():
    res = maximize_phi(BALL, 4.0, 1.0)
    assert abs(res.value - res.oracle_value) <= 1e-3
    # equalize min(sep, 2 d1, d2): sep = 2 - 1.5 v gives the level 0.8 R
    assert res.oracle_value == pytest.approx(0.8, abs=1e-3)


def test_maximize_phi_beats_random_probes():
    rng = np.random.default_rng(77)
    res = maximize_phi(BALL, 1.3, 0.7, MaximizeOptions(starts=16))
    for _ in range(1000):
        p1, p2 = BALL.random_points(rng, 2)
        assert phi(PointPair(p1, p2), 1.3, 0.7, BALL) <= res.value + 1e-9
