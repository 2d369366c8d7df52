"""Membership residuals and projections onto the constraint manifolds.

For a pair u with cached scalar reductions (see energy.PairNorms) the
two constraint functions along component scalings t = (t1, t2) are

    Psi_i(t) = t_i^2 Q_i - alpha_i t_i^p B_p,i - mu_i t_i^4 B_4,i
               - beta t_1^2 t_2^2 C,

whose common positive root is the projection onto the two-constraint
manifold.  The root solve is a sign-guided nested bisection (an
intermediate-value argument in each variable; the two-variable
intermediate-value principle supplies existence when the sign pattern on
a box boundary checks out), with a damped Newton fallback.  The
derivative matrix of (Psi_1, Psi_2) at a member, evaluated at t = (1,1),
has the closed form

    theta_ii  = -(p-2) alpha_i B_p,i - 2 mu_i B_4,i
    theta_12  = theta_21 = -2 beta C,

and det(theta) > (mu1 mu2 - beta^2) B_4,1 B_4,2 whenever beta^2 < mu1 mu2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .energy import PairNorms, cutoff_argument, eval_J_scaled, grad_J, pair_norms
from .grids import Field, Pair, inner_l2
from .params import PhysParams, chi, chi_prime


class ProjectionFailure(RuntimeError):
    """Raised when no sign-admissible box is found and Newton diverges."""

    def __init__(self, msg: str, residuals: tuple[float, float]):
        super().__init__(f"{msg} (last residuals {residuals[0]:.3e}, {residuals[1]:.3e})")
        self.residuals = residuals


@dataclass(frozen=True)
class FiberCoords:
    t1: float
    t2: float


@dataclass(frozen=True)
class NehariResidual:
    g1: float
    g2: float

    def max_abs(self) -> float:
        return max(abs(self.g1), abs(self.g2))


@dataclass(frozen=True)
class ThetaMatrix:
    t11: float
    t12: float
    t21: float
    t22: float

    def det(self) -> float:
        return self.t11 * self.t22 - self.t12 * self.t21


@dataclass(frozen=True)
class VectorProjection:
    coords: FiberCoords
    method: str              # "miranda-bisection" | "newton"
    residual1: float
    residual2: float
    multiple_roots: bool = False

    @property
    def t1(self) -> float:
        return self.coords.t1

    @property
    def t2(self) -> float:
        return self.coords.t2


# ----------------------------------------------------------------------
# residuals
# ----------------------------------------------------------------------

def residuals(u: Pair, params: PhysParams, norms: PairNorms | None = None) -> NehariResidual:
    """The two pairing values J'(u)(u1,0) and J'(u)(0,u2).

    Computed from the cached norms; by the summation-by-parts exactness of
    the discretization these agree with the quadrature pairings of the
    strong-form gradient to machine precision.
    """
    n = norms if norms is not None else pair_norms(u, params)
    s = cutoff_argument(n, params)
    cv = float(chi(s, params))
    cpv = float(chi_prime(s, params))
    denom = params.p * params.resolved_T() ** 2 * params.epsilon**4
    out = []
    for i in (1, 2):
        ci = -(2.0 * params.alpha(i) / denom) * n.bp(i) * cpv
        gi = ((1.0 + ci) * n.q(i)
              - params.alpha(i) * cv * n.bp(i)
              - params.mu(i) * n.b4(i)
              - params.beta * n.bc)
        out.append(gi)
    return NehariResidual(out[0], out[1])


def residuals_from_grad(u: Pair, params: PhysParams) -> NehariResidual:
    """Independent computation by pairing the strong-form gradient."""
    g = grad_J(u, params)
    return NehariResidual(inner_l2(g.u1, u.u1), inner_l2(g.u2, u.u2))


# ----------------------------------------------------------------------
# scalar projection
# ----------------------------------------------------------------------

def _scalar_t(q: float, alpha: float, bp: float, mu: float, b4: float, p: float) -> float:
    """Unique t > 0 with t^2 q = alpha t^p bp + mu t^4 b4."""
    if b4 <= 0.0 and (alpha <= 0.0 or bp <= 0.0):
        raise ValueError("no root: both the quartic and subcritical masses vanish")
    if q <= 0.0:
        raise ValueError("no root: vanishing norm")
    if alpha <= 0.0 or bp <= 0.0:
        return math.sqrt(q / (mu * b4))

    def f(t: float) -> float:
        return q - alpha * t ** (p - 2.0) * bp - mu * t * t * b4

    hi = 1.0
    while f(hi) > 0.0:
        hi *= 2.0
        if hi > 1e12:
            raise ValueError("no root bracketed")
    lo = hi / 2.0 if hi > 1.0 else 0.0
    while lo > 0.0 and f(lo) < 0.0:
        lo /= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    return 0.5 * (lo + hi)


def scalar_project(u: Field, component: int, params: PhysParams) -> tuple[float, Field]:
    """Project one component onto its single-component constraint set."""
    from .grids import h1_product, integrate_power

    lam, mu, alpha = params.lam(component), params.mu(component), params.alpha(component)
    q = h1_product(u, u, lam, params.epsilon)
    bp = integrate_power(u, params.p)
    b4 = integrate_power(u, 4.0)
    t = _scalar_t(q, alpha, bp, mu, b4, params.p)
    tu = u * t
    s = (t * t * q) / (params.resolved_T() ** 2 * params.epsilon**4)
    if s > 1.0 and params.cutoff_active:
        warnings.warn("scalar projection lands inside the cutoff window", stacklevel=2)
    return t, tu


# ----------------------------------------------------------------------
# the two constraint functions and their projection
# ----------------------------------------------------------------------

def psi_values(t1: float, t2: float, n: PairNorms, params: PhysParams) -> tuple[float, float]:
    p = params.p
    c = t1 * t1 * t2 * t2 * n.bc
    f1 = (t1 * t1 * n.q1 - params.alpha1 * t1**p * n.bp1
          - params.mu1 * t1**4 * n.b41 - params.beta * c)
    f2 = (t2 * t2 * n.q2 - params.alpha2 * t2**p * n.bp2
          - params.mu2 * t2**4 * n.b42 - params.beta * c)
    return f1, f2


def psi_jacobian(t1: float, t2: float, n: PairNorms, params: PhysParams) -> np.ndarray:
    p = params.p
    b = params.beta
    j11 = (2.0 * t1 * n.q1 - p * params.alpha1 * t1 ** (p - 1.0) * n.bp1
           - 4.0 * params.mu1 * t1**3 * n.b41 - 2.0 * b * t1 * t2 * t2 * n.bc)
    j22 = (2.0 * t2 * n.q2 - p * params.alpha2 * t2 ** (p - 1.0) * n.bp2
           - 4.0 * params.mu2 * t2**3 * n.b42 - 2.0 * b * t2 * t1 * t1 * n.bc)
    j12 = -2.0 * b * t1 * t1 * t2 * n.bc
    j21 = -2.0 * b * t2 * t2 * t1 * n.bc
    return np.array([[j11, j12], [j21, j22]])


def _inner_root_t1(t2: float, n: PairNorms, params: PhysParams) -> float | None:
    """Root in t1 of Psi_1(., t2); unique by monotonicity of Psi_1/t1^2."""
    p = params.p
    cpl = params.beta * t2 * t2 * n.bc

    def g(t1: float) -> float:
        return (n.q1 - params.alpha1 * t1 ** (p - 2.0) * n.bp1
                - params.mu1 * t1 * t1 * n.b41 - cpl)

    if g(1e-12) <= 0.0:
        return None
    hi = 1.0
    while g(hi) > 0.0:
        hi *= 2.0
        if hi > 1e10:
            return None
    lo = hi / 2.0 if hi > 1.0 else 1e-12
    while g(lo) < 0.0:
        lo /= 2.0
        if lo < 1e-14:
            break
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * hi:
            break
    return 0.5 * (lo + hi)


def _sign_pattern_ok(box: tuple[float, float, float, float],
                     n: PairNorms, params: PhysParams, samples: int = 9) -> bool:
    """Check the intermediate-value sign pattern on the box boundary."""
    a1, b1, a2, b2 = box
    t2s = np.linspace(a2, b2, samples)
    t1s = np.linspace(a1, b1, samples)
    ok = all(psi_values(a1, t2, n, params)[0] > 0.0 for t2 in t2s)
    ok = ok and all(psi_values(b1, t2, n, params)[0] < 0.0 for t2 in t2s)
    ok = ok and all(psi_values(t1, a2, n, params)[1] > 0.0 for t1 in t1s)
    ok = ok and all(psi_values(t1, b2, n, params)[1] < 0.0 for t1 in t1s)
    return ok


def _nested_bisection(box: tuple[float, float, float, float],
                      n: PairNorms, params: PhysParams) -> list[tuple[float, float]]:
    """Sign-guided bisection for common roots: solve Psi_1 = 0 in t1 for
    each t2, then bisect the reduced function of t2.  Returns all roots
    found by a coarse sign scan of the reduced function."""
    a2, b2 = box[2], box[3]

    def outer(t2: float) -> float | None:
        t1 = _inner_root_t1(t2, n, params)
        if t1 is None:
            return None
        return psi_values(t1, t2, n, params)[1]

    grid = np.geomspace(a2, b2, 96)
    vals = [outer(t2) for t2 in grid]
    roots: list[tuple[float, float]] = []
    for k in range(len(grid) - 1):
        v0, v1 = vals[k], vals[k + 1]
        if v0 is None or v1 is None or (v0 > 0.0) == (v1 > 0.0):
            continue
        lo, hi, flo = grid[k], grid[k + 1], v0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            fm = outer(mid)
            if fm is None:
                break
            if (fm > 0.0) == (flo > 0.0):
                lo, flo = mid, fm
            else:
                hi = mid
            if hi - lo <= 1e-13 * hi:
                break
        t2r = 0.5 * (lo + hi)
        t1r = _inner_root_t1(t2r, n, params)
        if t1r is not None:
            roots.append((t1r, t2r))
    return roots


def _newton_polish(t0: np.ndarray, n: PairNorms, params: PhysParams,
                   scales: tuple[float, float], tol: float,
                   max_iter: int = 50) -> tuple[np.ndarray, np.ndarray, float]:
    """Damped Newton (step halving) on (Psi_1, Psi_2) from seed t0."""
    s1, s2 = scales
    t = np.array(t0, dtype=float)
    f = np.array(psi_values(t[0], t[1], n, params))
    fnorm = math.hypot(f[0] / s1, f[1] / s2)
    for _ in range(max_iter):
        if fnorm <= tol:
            break
        J = psi_jacobian(t[0], t[1], n, params)
        try:
            step = np.linalg.solve(J, -f)
        except np.linalg.LinAlgError:
            break
        lam = 1.0
        while lam > 1e-8:
            cand = t + lam * step
            if cand[0] > 0.0 and cand[1] > 0.0:
                fc = np.array(psi_values(cand[0], cand[1], n, params))
                fcn = math.hypot(fc[0] / s1, fc[1] / s2)
                if fcn < fnorm:
                    t, f, fnorm = cand, fc, fcn
                    break
            lam *= 0.5
        else:
            break
    return t, f, fnorm


def project_norms(n: PairNorms, params: PhysParams,
                  box: tuple[float, float, float, float] | None = None,
                  tol: float = 1e-13) -> VectorProjection:
    """Common positive root of (Psi_1, Psi_2) given cached norms.

    Existence path: verify the intermediate-value sign pattern on a box
    boundary, then locate the root by nested sign-guided bisection (Newton
    refinement at the end).  When no sign-admissible box is found the
    damped Newton iteration seeded at the scalar projections takes over.
    If several roots appear in the scan, the one closest to (1,1) is
    returned with the multiplicity flag set.
    """
    t1_hat = _scalar_t(n.q1, params.alpha1, n.bp1, params.mu1, n.b41, params.p)
    t2_hat = _scalar_t(n.q2, params.alpha2, n.bp2, params.mu2, n.b42, params.p)
    scale1 = abs(n.q1) + params.mu1 * n.b41 + abs(params.beta) * n.bc
    scale2 = abs(n.q2) + params.mu2 * n.b42 + abs(params.beta) * n.bc
    scales = (scale1, scale2)

    if params.beta == 0.0 or n.bc == 0.0:
        f = psi_values(t1_hat, t2_hat, n, params)
        return VectorProjection(FiberCoords(t1_hat, t2_hat), "miranda-bisection",
                                f[0] / scale1, f[1] / scale2)

    boxes = [box] if box is not None else [
        (0.05 * t1_hat, 20.0 * t1_hat, 0.05 * t2_hat, 20.0 * t2_hat),
        (0.25 * t1_hat, 4.0 * t1_hat, 0.25 * t2_hat, 4.0 * t2_hat),
        (0.5 * t1_hat, 2.0 * t1_hat, 0.5 * t2_hat, 2.0 * t2_hat),
    ]
    for bx in boxes:
        if not _sign_pattern_ok(bx, n, params):
            continue
        roots = _nested_bisection(bx, n, params)
        if not roots:
            continue
        best = min(roots, key=lambda t: (t[0] - 1.0) ** 2 + (t[1] - 1.0) ** 2)
        t, f, fnorm = _newton_polish(np.array(best), n, params, scales, tol, max_iter=8)
        if fnorm <= max(100.0 * tol, 1e-10):
            return VectorProjection(FiberCoords(float(t[0]), float(t[1])),
                                    "miranda-bisection", f[0] / scale1, f[1] / scale2,
                                    multiple_roots=len(roots) > 1)

    t, f, fnorm = _newton_polish(np.array([t1_hat, t2_hat]), n, params, scales, tol)
    if fnorm > max(100.0 * tol, 1e-10):
        raise ProjectionFailure("vector projection did not converge",
                                (f[0] / scale1, f[1] / scale2))
    return VectorProjection(FiberCoords(float(t[0]), float(t[1])), "newton",
                            f[0] / scale1, f[1] / scale2)


def vector_project(u: Pair, params: PhysParams,
                   box: tuple[float, float, float, float] | None = None) -> VectorProjection:
    """Project a pair onto the two-constraint manifold along (t1 u1, t2 u2)."""
    n = pair_norms(u, params)
    return project_norms(n, params, box=box)


# ----------------------------------------------------------------------
# the derivative matrix at a member
# ----------------------------------------------------------------------

def theta(u: Pair, params: PhysParams, norms: PairNorms | None = None,
          member_tol: float = 1e-6) -> ThetaMatrix:
    """Closed-form constraint derivative matrix at t = (1,1).

    Valid on members; a warning is emitted when the membership residual is
    not small (the closed form uses the membership relations).
    """
    n = norms if norms is not None else pair_norms(u, params)
    res = residuals(u, params, norms=n)
    scale = max(n.q1, n.q2, 1e-300)
    if res.max_abs() > member_tol * scale:
        warnings.warn("theta evaluated off the constraint manifold", stacklevel=2)
    p = params.p
    t11 = -(p - 2.0) * params.alpha1 * n.bp1 - 2.0 * params.mu1 * n.b41
    t22 = -(p - 2.0) * params.alpha2 * n.bp2 - 2.0 * params.mu2 * n.b42
    t12 = -2.0 * params.beta * n.bc
    return ThetaMatrix(t11, t12, t12, t22)


def theta_det(u: Pair, params: PhysParams, norms: PairNorms | None = None) -> float:
    return theta(u, params, norms=norms).det()


# ----------------------------------------------------------------------
# fibering-map scan
# ----------------------------------------------------------------------

@dataclass
class FiberScan:
    t1_grid: np.ndarray
    t2_grid: np.ndarray
    values: np.ndarray            # values[i, j] = J(t1_i u1, t2_j u2)
    value_at_one: float
    argmax: FiberCoords
    max_gap: float                # max value - value at (1,1)

    def rows(self):
        for i, t1 in enumerate(self.t1_grid):
            for j, t2 in enumerate(self.t2_grid):
                yield t1, t2, self.values[i, j]

    def to_csv(self, stream) -> None:
        stream.write("t1,t2,Phi\n")
        for t1, t2, v in self.rows():
            stream.write(f"{t1:.17g},{t2:.17g},{v:.17g}\n")


def fiber_scan(u: Pair, params: PhysParams, t_grid: np.ndarray | None = None,
               norms: PairNorms | None = None) -> FiberScan:
    """Evaluate Phi(t) = J(t o u) on a grid; report argmax and the gap."""
    n = norms if norms is not None else pair_norms(u, params)
    tg = np.asarray(t_grid if t_grid is not None else np.geomspace(0.05, 4.0, 61))
    vals = np.empty((tg.size, tg.size))
    for i, t1 in enumerate(tg):
        for j, t2 in enumerate(tg):
            vals[i, j] = eval_J_scaled(float(t1), float(t2), n, params)
    at_one = eval_J_scaled(1.0, 1.0, n, params)
    imax, jmax = np.unravel_index(int(np.argmax(vals)), vals.shape)
    return FiberScan(tg, tg, vals, at_one,
                     FiberCoords(float(tg[imax]), float(tg[jmax])),
                     float(vals[imax, jmax] - at_one))
