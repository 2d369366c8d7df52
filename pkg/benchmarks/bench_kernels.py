"""Benchmark: compiled kernels vs the numpy fallback.

Times the hot inner-loop primitives (conservative stencils, weighted
reductions, profile shooting) on solver-representative sizes, plus one
end-to-end scalar ground-state solve per backend.

Run:  python3 benchmarks/bench_kernels.py
The backend of the current process is fixed at import; this script runs
the fallback numbers in a subprocess with SPIKELAB_PURE_PYTHON=1.
"""

from __future__ import annotations

import json
import os
import subprocess
import sys
import time

import numpy as np


def _timeit(fn, *args, repeat=5, number=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(number):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / number)
    return best


def collect() -> dict:
    import spikelab
    from spikelab import _kernels as K
    from spikelab.grids import RadialGrid, AxiGrid
    from spikelab.groundstate import SolveOptions, InitSpec, solve_scalar_ground
    from spikelab.params import PhysParams

    out = {"backend": spikelab.BACKEND_NAME}
    rng = np.random.default_rng(0)

    g = RadialGrid(16.0, 12_800)
    u = rng.normal(size=g.n + 1)
    v = rng.normal(size=g.n + 1)
    u[-1] = v[-1] = 0.0
    out["radial_apply_12800"] = _timeit(
        K.radial_apply, u, 1.0, 1.0, g.mid3, g.cellmom, g.h, None, number=20)
    out["radial_dirichlet_12800"] = _timeit(
        K.radial_dirichlet, u, v, g.mid3, g.h, number=20)
    out["wsum_pow_p=2.7_12800"] = _timeit(K.wsum_pow, g.weights, u, 2.7, number=20)
    out["wdot4_12800"] = _timeit(K.wdot4, g.weights, u, u, v, v, number=20)

    ax = AxiGrid(6.0, 600, 4.0, 200)
    u2 = np.where(ax.interior_bool, rng.normal(size=(601, 201)), 0.0)
    v2 = np.where(ax.interior_bool, rng.normal(size=(601, 201)), 0.0)
    out["axi_apply_600x200"] = _timeit(
        K.axi_apply, u2, 1.0, 1.0, ax.hx, ax.hr, ax.prho, ax.mrho, ax.interior, None,
        number=5)
    out["axi_dirichlet_600x200"] = _timeit(
        K.axi_dirichlet, u2, v2, ax.hx, ax.hr, ax.prho, ax.mrho, ax.lxi, number=5)

    out["shoot_classify"] = _timeit(
        K.shoot_classify, 1.0, 1.0, 1.0, 3.0, 18.35, 1e-3, 60.0, repeat=3, number=1)

    t0 = time.perf_counter()
    solve_scalar_ground(1, PhysParams(beta=0.0, p=3.0), RadialGrid(16.0, 6400),
                        SolveOptions(max_iter=300, tol=1e-9,
                                     init=InitSpec(width=0.2, amplitude=12.0)))
    out["scalar_solve_6400"] = time.perf_counter() - t0
    return out


def main() -> int:
    if os.environ.get("SPIKELAB_BENCH_CHILD") == "1":
        print(json.dumps(collect()))
        return 0
    here = collect()
    env = dict(os.environ, SPIKELAB_PURE_PYTHON="1", SPIKELAB_BENCH_CHILD="1")
    child = subprocess.run([sys.executable, os.path.abspath(__file__)],
                           env=env, capture_output=True, text=True, check=True)
    other = json.loads(child.stdout.strip().splitlines()[-1])
    a, b = (here, other) if here["backend"] == "compiled" else (other, here)
    print(f"{'kernel':<28}{'compiled':>12}{'numpy':>12}{'speedup':>9}")
    for key in a:
        if key == "backend":
            continue
        ta, tb = a[key], b[key]
        print(f"{key:<28}{ta * 1e3:>10.3f}ms{tb * 1e3:>10.3f}ms{tb / ta:>8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
