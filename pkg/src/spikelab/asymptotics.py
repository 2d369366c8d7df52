"""The small-eps experiment harness: energy limits, profile convergence,
spike separation, decay-rate and interaction-slope fits.

All terms of the energy scale exactly like eps^4 under the blow-up map, so
per-eps solves at fixed nodes-per-eps resolution are numerically identical
to unit-scale solves on growing domains; gap trends against a reference
level computed at the same resolution then isolate the pure domain effect.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .energy import interaction_I
from .grids import AxiGrid, Field, Pair, RadialGrid, inner_l2, max_point, rescale_to_reference
from .groundstate import InitSpec, ShootingResult, SolveOptions, solve_system_ground
from .params import PhysParams
from .placement import Domain4, dist_boundary


# ----------------------------------------------------------------------
# plans and records
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class EpsSweepPlan:
    eps_list: tuple[float, ...]
    domain: Domain4
    params: PhysParams                      # epsilon overridden per step
    nodes_per_eps: int = 16
    warm_start: bool = True
    solve: SolveOptions = field(default_factory=SolveOptions)
    limit_pair: Pair | None = None          # reference profiles on a radial grid
    axi_rho_frac: float = 1.0               # transverse extent for axi grids
    # initial spikes: width is in rescaled units (physical width = eps * hat),
    # centers are physical positions on the symmetry axis
    init_width_hat: float | None = None
    init_amplitude: float | None = None
    init_center1: float = 0.0
    init_center2: float = 0.0
    mirror: bool = False

    def __post_init__(self):
        eps = self.eps_list
        if len(eps) < 3:
            raise ValueError("a sweep needs at least 3 eps values")
        if any(e2 >= e1 for e1, e2 in zip(eps, eps[1:])):
            raise ValueError("eps values must be strictly decreasing")

    def options_for(self, eps: float) -> SolveOptions:
        width = None if self.init_width_hat is None else self.init_width_hat * eps
        i1 = InitSpec(width=width, amplitude=self.init_amplitude,
                      center=(self.init_center1, 0.0))
        i2 = InitSpec(width=width, amplitude=self.init_amplitude,
                      center=(self.init_center2, 0.0))
        return replace(self.solve, init=i1, init2=i2, mirror_symmetry=self.mirror)


@dataclass
class SpikeTraceEntry:
    eps: float
    ok: bool
    p1: np.ndarray | None = None
    p2: np.ndarray | None = None
    max1: float = math.nan
    max2: float = math.nan
    dist1: float = math.nan
    dist2: float = math.nan
    separation: float = math.nan            # |p1 - p2| / eps
    scaled_energy: float = math.nan         # eps^-4 * J
    l2_error: float = math.nan              # rescaled profile vs limit
    linf_error: float = math.nan
    truncation_zone: bool = False
    message: str = ""

    def csv_row(self) -> str:
        def f(x):
            return format(float(x), ".17g")
        pt = lambda q: "" if q is None else ";".join(f(v) for v in q)
        return ",".join([
            f(self.eps), "1" if self.ok else "0", pt(self.p1), pt(self.p2),
            f(self.max1), f(self.max2), f(self.dist1), f(self.dist2),
            f(self.separation), f(self.scaled_energy),
            f(self.l2_error), f(self.linf_error),
            "1" if self.truncation_zone else "0",
        ])


TRACE_HEADER = ("eps,ok,p1,p2,max1,max2,dist1,dist2,separation,"
                "scaled_energy,l2_error,linf_error,truncation_zone")


@dataclass
class DecayFit:
    rate: float
    window: tuple[float, float]
    residual: float
    npoints: int


# ----------------------------------------------------------------------
# sweeps
# ----------------------------------------------------------------------

def _grid_for(plan: EpsSweepPlan, eps: float):
    dom = plan.domain
    if dom.kind != "ball":
        raise ValueError("sweeps support ball domains")
    R = dom.radius
    h_target = eps / plan.nodes_per_eps
    if plan.params.beta > 0.0:
        n = max(64, int(round(R / h_target)))
        return RadialGrid(R, n)
    n_x = max(64, int(round(2.0 * R / h_target)))
    rho = plan.axi_rho_frac * R
    n_r = max(32, int(round(rho / h_target)))
    return AxiGrid(R, n_x, rho, n_r, ball_radius=R)


def _reference_grid(plan: EpsSweepPlan) -> RadialGrid:
    if plan.limit_pair is not None and isinstance(plan.limit_pair.grid, RadialGrid):
        return plan.limit_pair.grid
    return RadialGrid(8.0, 256)


def _profile_errors(solved: Pair, entry: SpikeTraceEntry, plan: EpsSweepPlan,
                    eps: float) -> None:
    if plan.limit_pair is None:
        return
    ref = _reference_grid(plan)
    l2, linf, wsum = 0.0, 0.0, 0.0
    for i, center in ((1, entry.p1), (2, entry.p2)):
        rs = rescale_to_reference(solved.component(i), center, eps, ref)
        entry.truncation_zone = entry.truncation_zone or rs.truncated
        diff = rs.field - plan.limit_pair.component(i)
        l2 += inner_l2(diff, diff)
        linf = max(linf, diff.linf)
        lim = plan.limit_pair.component(i)
        wsum += inner_l2(lim, lim)
    entry.l2_error = math.sqrt(l2 / max(wsum, 1e-300))
    entry.linf_error = linf


def run_sweep(plan: EpsSweepPlan) -> list[SpikeTraceEntry]:
    """One trace entry per eps; failures are recorded, not raised."""
    entries: list[SpikeTraceEntry] = []
    warm: Pair | None = None
    for eps in plan.eps_list:
        entry = SpikeTraceEntry(eps=eps, ok=False)
        try:
            params = plan.params.with_epsilon(eps)
            grid = _grid_for(plan, eps)
            init_pair = None
            if warm is not None and plan.warm_start:
                init_pair = Pair(_transplant(warm.u1, grid), _transplant(warm.u2, grid))
            res = solve_system_ground(params, grid, plan.options_for(eps),
                                      init_pair=init_pair)
            pair = res.pair
            entry.p1, entry.max1 = max_point(pair.u1)
            entry.p2, entry.max2 = max_point(pair.u2)
            entry.dist1 = dist_boundary(plan.domain, entry.p1)
            entry.dist2 = dist_boundary(plan.domain, entry.p2)
            entry.separation = float(np.linalg.norm(entry.p1 - entry.p2)) / eps
            entry.scaled_energy = res.energy / eps**4
            entry.truncation_zone = res.truncation_zone
            _profile_errors(pair, entry, plan, eps)
            entry.ok = True
            if plan.warm_start:
                warm = pair
        except Exception as exc:  # noqa: BLE001 - failures recorded per entry
            entry.message = f"{type(exc).__name__}: {exc}"
        entries.append(entry)
    return entries


def _transplant(f: Field, grid) -> Field:
    """Interpolate a field from its own grid onto a new one (same domain)."""
    src = f.grid
    if isinstance(src, RadialGrid) and isinstance(grid, RadialGrid):
        vals = np.interp(grid.r, src.r, f.values, right=0.0)
        vals[-1] = 0.0
        return Field(grid, vals)
    if isinstance(src, AxiGrid) and isinstance(grid, AxiGrid):
        from scipy.interpolate import RegularGridInterpolator

        itp = RegularGridInterpolator((src.xi, src.rho), f.values,
                                      bounds_error=False, fill_value=0.0)
        XI, RHO = np.meshgrid(grid.xi, grid.rho, indexing="ij")
        vals = itp(np.stack([XI.ravel(), RHO.ravel()], axis=1)).reshape(XI.shape)
        vals = np.where(grid.interior_bool, vals, 0.0)
        return Field(grid, vals)
    raise ValueError("warm start requires matching grid families")


def write_trace_csv(stream, entries: list[SpikeTraceEntry]) -> None:
    stream.write(TRACE_HEADER + "\n")
    for e in entries:
        stream.write(e.csv_row() + "\n")


# ----------------------------------------------------------------------
# decay fits
# ----------------------------------------------------------------------

def decay_fit(u: Field, center: np.ndarray, window: tuple[float, float],
              eps: float = 1.0) -> DecayFit:
    """Least-squares slope of log u against |x - center| / eps.

    Returns the positive decay rate nu (profile ~ exp(-nu * r)).  Windows
    containing nonpositive values are shrunk by dropping those nodes; if
    fewer than five usable nodes remain the fit refuses.
    """
    grid = u.grid
    center = np.asarray(center, dtype=float)
    if isinstance(grid, RadialGrid):
        if np.any(np.abs(center) > 1e-12):
            raise ValueError("radial decay fits are centered at the origin")
        rr = grid.r / eps
        vals = u.values
    else:
        a0 = int(round((center[0] + grid.L) / grid.hx))
        rr = grid.rho / eps
        vals = u.values[a0, :]
    lo, hi = window
    mask = (rr >= lo) & (rr <= hi)
    mask &= vals > 0.0
    if int(np.count_nonzero(mask)) < 5:
        raise ValueError("decay window has fewer than 5 usable nodes")
    x = rr[mask]
    y = np.log(vals[mask])
    A = np.vstack([x, np.ones_like(x)]).T
    coef, res_arr, _, _ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(res_arr[0]) if res_arr.size else 0.0
    return DecayFit(rate=-float(coef[0]), window=(float(x[0]), float(x[-1])),
                    residual=resid, npoints=int(x.size))


# ----------------------------------------------------------------------
# limit checks and interaction slopes
# ----------------------------------------------------------------------

@dataclass
class EnergyLimitReport:
    gaps: list[float]
    eps: list[float]
    monotone: bool
    empirical_order: float
    final_gap_rel: float
    passed: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def energy_limit_check(entries: list[SpikeTraceEntry], B: float,
                       tol_rel: float = 0.05) -> EnergyLimitReport:
    """Gaps |eps^-4 J - B|, their monotonicity, and the log-log slope."""
    if B <= 0.0:
        raise ValueError("reference level B must be positive")
    good = [e for e in entries if e.ok]
    if len(good) < 3:
        raise ValueError("need at least 3 successful entries")
    eps = [e.eps for e in good]
    gaps = [abs(e.scaled_energy - B) for e in good]
    monotone = all(g1 >= g2 for g1, g2 in zip(gaps, gaps[1:]))
    x = np.log([e for e in eps])
    y = np.log([max(g, 1e-300) for g in gaps])
    slope = float(np.polyfit(x, y, 1)[0])
    final_rel = gaps[-1] / abs(B)
    return EnergyLimitReport(gaps, eps, monotone, slope, final_rel,
                             monotone and final_rel < tol_rel)


@dataclass
class SlopeFit:
    d: float
    slope: float                 # d(log I) / d(1/eps)
    values: list[float]
    dropped: int


def interaction_slope(prof1: ShootingResult, prof2: ShootingResult,
                      d: float, eps_list: tuple[float, ...]) -> SlopeFit:
    """Slope of log I against 1/eps at fixed center distance d."""
    inv, logs = [], []
    dropped = 0
    for eps in eps_list:
        val = interaction_I(prof1.r, prof1.u, prof2.r, prof2.u, d, eps).value
        if val < 1e-300:
            dropped += 1
            continue
        inv.append(1.0 / eps)
        logs.append(math.log(val))
    if len(inv) < 2:
        raise ValueError("not enough interaction values above underflow")
    slope = float(np.polyfit(np.asarray(inv), np.asarray(logs), 1)[0])
    return SlopeFit(d=d, slope=slope, values=logs, dropped=dropped)
