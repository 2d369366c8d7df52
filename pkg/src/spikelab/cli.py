"""Configuration-driven experiment runner and report emitter.

Subcommands: constants, scalar-ground, system-ground, sweep, placement,
interaction, report.  Each run reads a JSON config, writes a JSON report
(schema 1) plus CSV artifacts into the output directory, and exits 0 iff
every assertion flag in the report passed.  Identical config and seed
produce byte-identical CSV bodies; wall-clock timings live in a separate
report key excluded from semantic comparison.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from ._kernels import BACKEND_NAME
from .asymptotics import (
    EpsSweepPlan,
    energy_limit_check,
    interaction_slope,
    run_sweep,
    write_trace_csv,
)
from .grids import Pair, RadialGrid, dump_profile_csv
from .groundstate import (
    A1,
    InitSpec,
    LimitConstants,
    SolveOptions,
    bubble_ratio_oracle,
    k_system,
    shooting_oracle,
    sobolev_constant,
    solve_scalar_ground,
    solve_system_ground,
)
from .nehari import residuals
from .params import CUTOFF_INTERPOLANT, PARAM_KEYS, PhysParams, validate
from .placement import Domain4, MaximizeOptions, maximize_dist, maximize_phi

KINDS = ("constants", "scalar-ground", "system-ground", "sweep", "placement",
         "interaction")

_SECTION_KEYS = {
    "": {"schema", "kind", "params", "domain", "solver", "sweep", "interaction",
         "placement", "out", "seed", "threads", "quiet"},
    "params": set(PARAM_KEYS),
    "domain": {"variant", "center", "radius", "intervals", "r_in", "r_out"},
    "solver": {"max_iter", "tol", "newton_at", "grid_R", "grid_n", "init_width",
               "init_amplitude", "init_center1", "init_center2", "mirror_symmetry",
               "nodes_per_eps"},
    "sweep": {"eps_list", "warm_start", "nodes_per_eps", "B_reference",
              "init_width_hat", "init_amplitude", "init_center1", "init_center2",
              "mirror"},
    "interaction": {"d_list", "eps_list", "component_params"},
    "placement": {"objective", "starts"},
}

_REQUIRED = {
    "constants": ("params",),
    "scalar-ground": ("params", "solver"),
    "system-ground": ("params", "solver"),
    "sweep": ("params", "domain", "sweep"),
    "placement": ("params", "domain"),
    "interaction": ("params", "interaction"),
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    kind: str
    params: PhysParams
    raw: dict
    out: str = "runs"
    seed: int = 0
    domain: Domain4 | None = None

    def echo(self) -> dict:
        d = dict(self.raw)
        d.setdefault("schema", 1)
        d["out"] = self.out
        d["seed"] = self.seed
        d["params"] = self.params.to_dict()
        return d


def _check_keys(d: dict, section: str) -> None:
    allowed = _SECTION_KEYS[section]
    unknown = sorted(set(d) - allowed)
    if unknown:
        where = section or "top level"
        raise ConfigError(f"unknown keys in {where}: {unknown}")


def parse_config(text: str) -> RunConfig:
    """Validate the JSON config; unknown keys are rejected by name."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    _check_keys(raw, "")
    if raw.get("schema", 1) != 1:
        raise ConfigError(f"unsupported schema {raw.get('schema')!r}")
    kind = raw.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"kind must be one of {KINDS}, got {kind!r}")
    for sec in ("params", "domain", "solver", "sweep", "interaction", "placement"):
        if sec in raw:
            if not isinstance(raw[sec], dict):
                raise ConfigError(f"section {sec!r} must be an object")
            _check_keys(raw[sec], sec)
    missing = [s for s in _REQUIRED[kind] if s not in raw]
    if missing:
        raise ConfigError(f"kind {kind!r} requires sections {missing}")
    params = PhysParams.from_dict(raw.get("params", {}))
    domain = _parse_domain(raw["domain"]) if "domain" in raw else None
    return RunConfig(kind=kind, params=params, raw=raw,
                     out=str(raw.get("out", "runs")),
                     seed=int(raw.get("seed", 0)), domain=domain)


def _parse_domain(d: dict) -> Domain4:
    variant = d.get("variant")
    if variant == "ball":
        return Domain4.ball(center=tuple(d.get("center", (0, 0, 0, 0))),
                            radius=float(d.get("radius", 1.0)))
    if variant == "box":
        return Domain4.box(d.get("intervals", [(0, 1)] * 4))
    if variant == "shell":
        return Domain4.shell(center=tuple(d.get("center", (0, 0, 0, 0))),
                             r_in=float(d.get("r_in", 1.0)),
                             r_out=float(d.get("r_out", 2.0)))
    raise ConfigError(f"unknown domain variant {variant!r}")


def _solver_options(cfg: RunConfig) -> SolveOptions:
    s = cfg.raw.get("solver", {})
    init = InitSpec(width=s.get("init_width"), amplitude=s.get("init_amplitude"),
                    center=s.get("init_center1", 0.0))
    init2 = None
    if "init_center2" in s:
        init2 = InitSpec(width=s.get("init_width"), amplitude=s.get("init_amplitude"),
                         center=s.get("init_center2"))
    return SolveOptions(max_iter=int(s.get("max_iter", 2000)),
                        tol=float(s.get("tol", 1e-9)),
                        newton_at=float(s.get("newton_at", 1e-3)),
                        init=init, init2=init2,
                        mirror_symmetry=bool(s.get("mirror_symmetry", False)),
                        seed=cfg.seed)


def _solver_grid(cfg: RunConfig) -> RadialGrid:
    s = cfg.raw.get("solver", {})
    R = float(s.get("grid_R", 14.0))
    n = int(s.get("grid_n", 4000))
    return RadialGrid(R, n)


# ----------------------------------------------------------------------
# assertions and report plumbing
# ----------------------------------------------------------------------

@dataclass
class RunReport:
    config: dict
    results: dict = field(default_factory=dict)
    assertions: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    def check(self, name: str, passed: bool, margin: float) -> None:
        self.assertions.append({"name": name, "passed": bool(passed),
                                "margin": float(margin)})

    @property
    def all_passed(self) -> bool:
        return all(a["passed"] for a in self.assertions)

    def to_json(self) -> str:
        body = {
            "schema": 1,
            "tool_version": __version__,
            "kernel_backend": BACKEND_NAME,
            "cutoff_interpolant": CUTOFF_INTERPOLANT,
            "config": self.config,
            "results": self.results,
            "assertions": self.assertions,
            "all_passed": self.all_passed,
            "timings": self.timings,
        }
        return json.dumps(body, indent=2, sort_keys=True, default=_json_default)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)!r}")


# ----------------------------------------------------------------------
# the drivers
# ----------------------------------------------------------------------

def _run_constants(cfg: RunConfig, rep: RunReport, outdir: Path) -> None:
    p = cfg.params
    se = sobolev_constant()
    oracle = bubble_ratio_oracle()
    d1 = shooting_oracle(p.lambda1, p.mu1, p.alpha1, p.p)
    d2 = shooting_oracle(p.lambda2, p.mu2, p.alpha2, p.p)
    k1, k2 = k_system(p.mu1, p.mu2, p.beta) if p.beta**2 != p.mu1 * p.mu2 else (math.nan,) * 2
    try:
        a1 = A1(p, se.S)
    except Exception:
        a1 = math.nan
    consts = LimitConstants(S=se.S, d1=d1.energy, d2=d2.energy, A1=a1,
                            k1=k1, k2=k2, S_error=se.error)
    rep.results["constants"] = consts.to_dict()
    rep.results["sobolev"] = {"ratios": list(se.ratios), "gap_ratios": list(se.gap_ratios),
                              "oracle": oracle}
    s2 = se.S**2
    rep.check("S matches the 1-D oracle to 1e-6", abs(se.S - oracle) / oracle < 1e-6,
              1e-6 - abs(se.S - oracle) / oracle)
    rep.check("0 < d1 < S^2/(4 mu1)", 0.0 < d1.energy < s2 / (4 * p.mu1),
              s2 / (4 * p.mu1) - d1.energy)
    rep.check("0 < d2 < S^2/(4 mu2)", 0.0 < d2.energy < s2 / (4 * p.mu2),
              s2 / (4 * p.mu2) - d2.energy)
    if not math.isnan(k1):
        r1 = abs(p.mu1 * k1 + p.beta * k2 - 1.0)
        r2 = abs(p.mu2 * k2 + p.beta * k1 - 1.0)
        rep.check("k-system residual < 1e-12", max(r1, r2) < 1e-12,
                  1e-12 - max(r1, r2))


def _run_scalar(cfg: RunConfig, rep: RunReport, outdir: Path) -> None:
    grid = _solver_grid(cfg)
    res = solve_scalar_ground(1, cfg.params, grid, _solver_options(cfg))
    rep.results["ground"] = res.summary()
    rep.results["breakdown"] = res.breakdown.to_dict()
    with open(outdir / "profile.csv", "w") as fh:
        dump_profile_csv(fh, Pair(res.field, grid.zeros()))
    rep.check("solver converged", res.converged, res.residual)


def _run_system(cfg: RunConfig, rep: RunReport, outdir: Path) -> None:
    grid = _solver_grid(cfg)
    res = solve_system_ground(cfg.params, grid, _solver_options(cfg))
    rep.results["ground"] = res.summary()
    rep.results["breakdown"] = res.breakdown.to_dict()
    nres = residuals(res.pair, cfg.params)
    rep.results["nehari_residuals"] = [nres.g1, nres.g2]
    with open(outdir / "profile.csv", "w") as fh:
        dump_profile_csv(fh, res.pair)
    rep.check("solver converged", res.converged, res.residual)
    rep.check("nontrivial pair", not res.semi_trivial, 1.0)


def _run_sweep(cfg: RunConfig, rep: RunReport, outdir: Path) -> None:
    sw = cfg.raw["sweep"]
    width_hat = sw.get("init_width_hat")
    plan = EpsSweepPlan(eps_list=tuple(float(e) for e in sw["eps_list"]),
                        domain=cfg.domain, params=cfg.params,
                        nodes_per_eps=int(sw.get("nodes_per_eps", 16)),
                        warm_start=bool(sw.get("warm_start", True)),
                        solve=_solver_options(cfg),
                        init_width_hat=float(width_hat) if width_hat is not None else None,
                        init_amplitude=sw.get("init_amplitude"),
                        init_center1=float(sw.get("init_center1", 0.0)),
                        init_center2=float(sw.get("init_center2", 0.0)),
                        mirror=bool(sw.get("mirror", False)))
    entries = run_sweep(plan)
    with open(outdir / "trace.csv", "w") as fh:
        write_trace_csv(fh, entries)
    rep.results["sweep"] = {"ok": [e.ok for e in entries],
                            "scaled_energy": [e.scaled_energy for e in entries],
                            "separation": [e.separation for e in entries]}
    if "B_reference" in sw:
        chk = energy_limit_check(entries, float(sw["B_reference"]))
        rep.results["energy_limit"] = chk.to_dict()
        rep.check("scaled-energy gaps shrink to the reference", chk.passed,
                  0.05 - chk.final_gap_rel)
    rep.check("all sweep entries solved", all(e.ok for e in entries),
              float(sum(e.ok for e in entries)))


def _run_placement(cfg: RunConfig, rep: RunReport, outdir: Path) -> None:
    pl = cfg.raw.get("placement", {})
    objective = pl.get("objective", "phi")
    if objective == "dist":
        res = maximize_dist(cfg.domain)
    else:
        res = maximize_phi(cfg.domain, cfg.params.lambda1, cfg.params.lambda2,
                           MaximizeOptions(starts=int(pl.get("starts", 32)),
                                           seed=cfg.seed or 20240))
    rep.results["placement"] = res.to_dict()
    with open(outdir / "placement.csv", "w") as fh:
        fh.write("component,value\n")
        for k, v in enumerate(np.asarray(res.optimizer).ravel()):
            fh.write(f"x{k},{format(float(v), '.17g')}\n")
    if objective == "phi":
        from .placement import PointPair, phi as phi_fn

        # symmetric collinear family (s, -s): the plotting contract for the
        # brute-force oracle landscape
        scale = cfg.domain.inradius * 2.0
        with open(outdir / "oracle_curve.csv", "w") as fh:
            fh.write("s,phi\n")
            e1 = np.array([1.0, 0.0, 0.0, 0.0])
            c = np.asarray(cfg.domain.center)
            for s in np.linspace(0.0, scale, 401):
                val = phi_fn(PointPair(c + s * e1, c - s * e1),
                             cfg.params.lambda1, cfg.params.lambda2, cfg.domain)
                fh.write(f"{s:.17g},{val:.17g}\n")
    gap = abs(res.value - res.oracle_value)
    rep.check("optimizer matches the reduced brute-force oracle to 1e-3",
              gap <= 1e-3, 1e-3 - gap)


def _run_interaction(cfg: RunConfig, rep: RunReport, outdir: Path) -> None:
    ia = cfg.raw["interaction"]
    p = cfg.params
    eps_list = tuple(float(e) for e in ia["eps_list"])
    # profiles must cover the largest center distance plus decay margin
    d_max = max(float(d) for d in ia["d_list"])
    sl_min = math.sqrt(min(p.lambda1, p.lambda2))
    r_max = max(30.0 / sl_min, 0.8 * d_max / min(eps_list) + 16.0 / sl_min)
    prof1 = shooting_oracle(p.lambda1, p.mu1, p.alpha1, p.p, r_max=r_max)
    prof2 = shooting_oracle(p.lambda2, p.mu2, p.alpha2, p.p, r_max=r_max)
    rows = []
    for d in ia["d_list"]:
        fit = interaction_slope(prof1, prof2, float(d), eps_list)
        expected = -2.0 * math.sqrt(min(p.lambda1, p.lambda2)) * float(d)
        rows.append({"d": float(d), "slope": fit.slope, "expected": expected,
                     "rel_err": abs(fit.slope - expected) / abs(expected)})
    rep.results["interaction"] = rows
    with open(outdir / "interaction.csv", "w") as fh:
        fh.write("d,slope,expected\n")
        for r in rows:
            fh.write(f"{r['d']:.17g},{r['slope']:.17g},{r['expected']:.17g}\n")
    worst = max(r["rel_err"] for r in rows)
    rep.check("interaction slopes within 10% of -2 sqrt(min lam) d",
              worst <= 0.10, 0.10 - worst)


_DRIVERS = {
    "constants": _run_constants,
    "scalar-ground": _run_scalar,
    "system-ground": _run_system,
    "sweep": _run_sweep,
    "placement": _run_placement,
    "interaction": _run_interaction,
}


def run(cfg: RunConfig, quiet: bool = False) -> RunReport:
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    rep = RunReport(config=cfg.echo())
    vr = validate(cfg.params)
    rep.check("parameters valid", vr.ok, float(len(vr.violations)))
    if not vr.ok:
        rep.results["violations"] = list(vr.violations)
    t0 = time.perf_counter()
    if vr.ok:
        _DRIVERS[cfg.kind](cfg, rep, outdir)
    rep.timings["wall_seconds"] = time.perf_counter() - t0
    (outdir / "report.json").write_text(rep.to_json())
    if not quiet:
        for a in rep.assertions:
            status = "PASS" if a["passed"] else "FAIL"
            print(f"[{status}] {a['name']} (margin {a['margin']:.3e})")
    return rep


def _cmd_report(paths: list[str], out: str, quiet: bool) -> int:
    """Merge JSON reports into one summary table."""
    rows = []
    ok = True
    for path in paths:
        body = json.loads(Path(path).read_text())
        passed = body.get("all_passed", False)
        ok = ok and passed
        rows.append((path, body.get("config", {}).get("kind", "?"), passed,
                     len(body.get("assertions", []))))
    lines = ["report,kind,passed,assertions"]
    for path, kind, passed, na in rows:
        lines.append(f"{path},{kind},{int(passed)},{na}")
    text = "\n".join(lines) + "\n"
    if out:
        Path(out).mkdir(parents=True, exist_ok=True)
        (Path(out) / "summary.csv").write_text(text)
    if not quiet:
        print(text, end="")
    return 0 if ok else 1


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="spikelab",
                                 description="two-component critical system laboratory")
    sub = ap.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        sp = sub.add_parser(kind)
        sp.add_argument("--config", required=True)
        sp.add_argument("--out", default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--quiet", action="store_true")
    rp = sub.add_parser("report")
    rp.add_argument("reports", nargs="+")
    rp.add_argument("--out", default="")
    rp.add_argument("--quiet", action="store_true")
    ns = ap.parse_args(argv)

    if ns.command == "report":
        return _cmd_report(ns.reports, ns.out, ns.quiet)

    try:
        cfg = parse_config(Path(ns.config).read_text())
    except (OSError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if cfg.kind != ns.command:
        print(f"config kind {cfg.kind!r} does not match subcommand {ns.command!r}",
              file=sys.stderr)
        return 2
    if ns.out is not None:
        cfg.out = ns.out
    if ns.seed is not None:
        cfg.seed = ns.seed
    rep = run(cfg, quiet=ns.quiet)
    return 0 if rep.all_passed else 1


if __name__ == "__main__":
    sys.exit(main())
