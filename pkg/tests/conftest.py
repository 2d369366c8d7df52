"""Shared fixtures: expensive solves are session-scoped and reused by the
unit tests and the acceptance gate.  Acceptance criteria register one
PASS/FAIL line each; the lines are echoed in the terminal summary and
written to acceptance_summary.txt.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import pytest

from spikelab.params import PhysParams
from spikelab.grids import Pair, RadialGrid, resample_from_profile
from spikelab.groundstate import (
    InitSpec,
    SolveOptions,
    shooting_oracle,
    solve_scalar_ground,
    solve_system_ground,
)

SYMMETRIC_BASE = dict(lambda1=1.0, lambda2=1.0, mu1=1.0, mu2=1.0,
                      alpha1=1.0, alpha2=1.0, p=3.0)

#: the three scalar parameter sets exercised by the acceptance gate:
#: (lam, mu, alpha, p, ball R, grid n, init width, init amplitude)
SCALAR_CASES = (
    (1.0, 1.0, 1.0, 3.0, 16.0, 12_800, 0.2, 12.0),
    (2.0, 1.0, 0.5, 2.5, 11.5, 1_000_000, 8e-4, 2500.0),
    (1.0, 3.0, 1.0, 3.5, 16.0, 19_200, 0.15, 10.0),
)


# ----------------------------------------------------------------------
# acceptance bookkeeping
# ----------------------------------------------------------------------

_CRITERIA: list[tuple[str, bool, str, float]] = []


def record_criterion(name: str, passed: bool, detail: str, seconds: float) -> None:
    _CRITERIA.append((name, passed, detail, seconds))


@pytest.fixture
def criterion():
    def _rec(name: str, passed: bool, detail: str, seconds: float) -> None:
        record_criterion(name, passed, detail, seconds)
        status = "PASS" if passed else "FAIL"
        print(f"[{status}] {name}: {detail} ({seconds:.1f}s)")

    return _rec


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    lines = []
    for name, passed, detail, seconds in _CRITERIA:
        status = "PASS" if passed else "FAIL"
        line = f"[{status}] {name}: {detail} ({seconds:.1f}s)"
        terminalreporter.write_line(line)
        lines.append(line)
    try:
        with open("acceptance_summary.txt", "w") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError:
        pass


# ----------------------------------------------------------------------
# session-scoped solves
# ----------------------------------------------------------------------

@dataclass
class ScalarCase:
    lam: float
    mu: float
    alpha: float
    p: float
    shoot: object
    grid_result: object
    grid: RadialGrid
    seconds: float


@pytest.fixture(scope="session")
def scalar_cases() -> list[ScalarCase]:
    out = []
    for lam, mu, alpha, p, R, n, w0, a0 in SCALAR_CASES:
        t0 = time.perf_counter()
        sh = shooting_oracle(lam, mu, alpha, p, r_max=R)
        params = PhysParams(lambda1=lam, mu1=mu, alpha1=alpha, p=p, beta=0.0)
        grid = RadialGrid(R, n)
        res = solve_scalar_ground(1, params, grid,
                                  SolveOptions(max_iter=600, tol=1e-9,
                                               init=InitSpec(width=w0, amplitude=a0)))
        out.append(ScalarCase(lam, mu, alpha, p, sh, res, grid,
                              time.perf_counter() - t0))
    return out


@dataclass
class SystemFamily:
    """The symmetric (1,1,1,3) family on one large radial grid."""

    grid: RadialGrid
    d1: object          # scalar ground state (beta-free)
    sys_pos: object     # beta = 0.1 system state
    params_pos: PhysParams
    B_pos: float
    seconds: float


@pytest.fixture(scope="session")
def system_family() -> SystemFamily:
    t0 = time.perf_counter()
    grid = RadialGrid(18.0, 7_700)
    init = InitSpec(width=0.2, amplitude=14.0)
    d1 = solve_scalar_ground(1, PhysParams(beta=0.0, **SYMMETRIC_BASE), grid,
                             SolveOptions(max_iter=500, tol=1e-9, init=init))
    params_pos = PhysParams(beta=0.1, **SYMMETRIC_BASE)
    sys_pos = solve_system_ground(params_pos, grid,
                                  SolveOptions(max_iter=500, tol=1e-9, init=init))
    return SystemFamily(grid, d1, sys_pos, params_pos, sys_pos.energy,
                        time.perf_counter() - t0)


@dataclass
class SweepReference:
    """Reference level and limit profiles for the attractive-coupling sweep,
    computed at the same rescaled resolution as the sweep solves."""

    nodes_per_eps: int
    B: float
    limit_pair: Pair
    params: PhysParams
    seconds: float


@pytest.fixture(scope="session")
def sweep_reference() -> SweepReference:
    t0 = time.perf_counter()
    NPE = 256
    params = PhysParams(beta=0.1, **SYMMETRIC_BASE)
    gref = RadialGrid(15.0, 15 * NPE)
    bres = solve_system_ground(params.with_epsilon(1.0), gref,
                               SolveOptions(max_iter=800, tol=1e-10,
                                            init=InitSpec(width=0.2, amplitude=14.0)))
    ref_grid = RadialGrid(8.0, 8 * NPE)
    limit_pair = Pair(resample_from_profile(gref.r, bres.pair.u1.values, ref_grid),
                      resample_from_profile(gref.r, bres.pair.u2.values, ref_grid))
    return SweepReference(NPE, bres.energy, limit_pair, params,
                          time.perf_counter() - t0)


@pytest.fixture(scope="session")
def shoot_cache():
    cache: dict = {}

    def _get(lam, mu, alpha, p, r_max=None):
        key = (lam, mu, alpha, p, r_max)
        if key not in cache:
            cache[key] = shooting_oracle(lam, mu, alpha, p, r_max=r_max)
        return cache[key]

    return _get
