"""Functionals of the model, their gradients, and identity diagnostics.

The truncated pair functional is

    J(u) = sum_i ( 1/2 ||u_i||_i^2
                   - (alpha_i/p) B_p(u_i) * chi(s)
                   - (mu_i/4)   B_4(u_i) )
           - (beta/2) * C(u1, u2),

with B_q(u) = integral |u|^q, C = integral u1^2 u2^2, the eps-weighted H^1
norms ||.||_i, and s = (||u1||_1^2 + ||u2||_2^2) / (T^2 eps^4).

The strong-form gradient (the quadrature-L^2 Riesz representative) of
component i is

    (1 + c_i) * (-eps^2 Lap u_i + lambda_i u_i)
        - alpha_i chi(s) |u_i|^{p-2} u_i - mu_i u_i^3 - beta u_{3-i}^2 u_i,

with the cutoff correction c_i = -(2 alpha_i / (p T^2 eps^4)) B_p(u_i)
chi'(s) attached to component i.  Outside the cutoff window (chi' = 0,
which covers every solver regime by the choice of T) this is the exact
Frechet derivative; inside the window the per-component attachment of c_i
is the documented convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np

from .grids import (
    TWO_PI2,
    Field,
    Pair,
    RadialGrid,
    apply_operator,
    coupling_integral,
    dirichlet_form,
    h1_product,
    inner_l2,
    integrate_power,
)
from .params import CUTOFF_INTERPOLANT, PhysParams, chi, chi_prime


# ----------------------------------------------------------------------
# cached scalar reductions of a pair
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class PairNorms:
    """The seven scalars every membership/fibering formula is built from."""

    q1: float   # ||u1||_{1,eps}^2
    q2: float   # ||u2||_{2,eps}^2
    bp1: float  # integral |u1|^p
    bp2: float
    b41: float  # integral u1^4
    b42: float
    bc: float   # integral u1^2 u2^2

    def q(self, i: int) -> float:
        return self.q1 if i == 1 else self.q2

    def bp(self, i: int) -> float:
        return self.bp1 if i == 1 else self.bp2

    def b4(self, i: int) -> float:
        return self.b41 if i == 1 else self.b42


def pair_norms(u: Pair, params: PhysParams) -> PairNorms:
    eps = params.epsilon
    return PairNorms(
        q1=h1_product(u.u1, u.u1, params.lambda1, eps),
        q2=h1_product(u.u2, u.u2, params.lambda2, eps),
        bp1=integrate_power(u.u1, params.p),
        bp2=integrate_power(u.u2, params.p),
        b41=integrate_power(u.u1, 4.0),
        b42=integrate_power(u.u2, 4.0),
        bc=coupling_integral(u),
    )


def cutoff_argument(n: PairNorms, params: PhysParams) -> float:
    T = params.resolved_T()
    return (n.q1 + n.q2) / (T * T * params.epsilon**4)


# ----------------------------------------------------------------------
# the functionals
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class EnergyBreakdown:
    """Signed pieces of J; total re-assembles from them exactly."""

    h1_half_1: float
    h1_half_2: float
    subcritical_1: float   # (alpha_i/p) B_p(u_i), before the cutoff factor
    subcritical_2: float
    quartic_1: float       # (mu_i/4) B_4(u_i)
    quartic_2: float
    coupling: float        # (beta/2) C(u1,u2)
    chi_value: float
    chi_argument: float
    total: float
    cutoff_interpolant: str = CUTOFF_INTERPOLANT

    def reassemble(self) -> float:
        return (self.h1_half_1 + self.h1_half_2
                - self.chi_value * (self.subcritical_1 + self.subcritical_2)
                - self.quartic_1 - self.quartic_2
                - self.coupling)

    def to_dict(self) -> dict:
        return asdict(self)


def eval_J(u: Pair, params: PhysParams, norms: PairNorms | None = None) -> EnergyBreakdown:
    """The truncated functional, as a term-by-term breakdown."""
    n = norms if norms is not None else pair_norms(u, params)
    s = cutoff_argument(n, params)
    cv = float(chi(s, params))
    parts = dict(
        h1_half_1=0.5 * n.q1,
        h1_half_2=0.5 * n.q2,
        subcritical_1=params.alpha1 / params.p * n.bp1,
        subcritical_2=params.alpha2 / params.p * n.bp2,
        quartic_1=params.mu1 / 4.0 * n.b41,
        quartic_2=params.mu2 / 4.0 * n.b42,
        coupling=params.beta / 2.0 * n.bc,
        chi_value=cv,
        chi_argument=s,
    )
    total = (parts["h1_half_1"] + parts["h1_half_2"]
             - cv * (parts["subcritical_1"] + parts["subcritical_2"])
             - parts["quartic_1"] - parts["quartic_2"] - parts["coupling"])
    return EnergyBreakdown(total=total, **parts)


def eval_J_scaled(t1: float, t2: float, n: PairNorms, params: PhysParams) -> float:
    """J(t o u) from cached norms (polynomial in t, O(1) per evaluation)."""
    p = params.p
    q1 = t1 * t1 * n.q1
    q2 = t2 * t2 * n.q2
    s = (q1 + q2) / (params.resolved_T() ** 2 * params.epsilon**4)
    cv = float(chi(s, params))
    return (0.5 * (q1 + q2)
            - cv * (params.alpha1 / p * t1**p * n.bp1 + params.alpha2 / p * t2**p * n.bp2)
            - params.mu1 / 4.0 * t1**4 * n.b41 - params.mu2 / 4.0 * t2**4 * n.b42
            - params.beta / 2.0 * t1 * t1 * t2 * t2 * n.bc)


def eval_E_scalar(u: Field, component: int, params: PhysParams) -> float:
    """Single-component (untruncated) energy E_i."""
    lam, mu, alpha = params.lam(component), params.mu(component), params.alpha(component)
    q = h1_product(u, u, lam, params.epsilon)
    return (0.5 * q - alpha / params.p * integrate_power(u, params.p)
            - mu / 4.0 * integrate_power(u, 4.0))


def _signed_power(vals: np.ndarray, expo: float) -> np.ndarray:
    return np.sign(vals) * np.abs(vals) ** expo


def grad_J(u: Pair, params: PhysParams, norms: PairNorms | None = None) -> Pair:
    """Strong-form Euler-Lagrange residual field pair (Dirichlet rows 0)."""
    n = norms if norms is not None else pair_norms(u, params)
    s = cutoff_argument(n, params)
    cv = float(chi(s, params))
    cpv = float(chi_prime(s, params))
    T = params.resolved_T()
    eps = params.epsilon
    denom = params.p * T * T * eps**4
    out = []
    for i in (1, 2):
        ui, uo = u.component(i), u.component(3 - i)
        ci = -(2.0 * params.alpha(i) / denom) * n.bp(i) * cpv
        a = apply_operator(ui, params.lam(i), eps)
        g = (1.0 + ci) * a.values \
            - params.alpha(i) * cv * _signed_power(ui.values, params.p - 1.0) \
            - params.mu(i) * ui.values**3 \
            - params.beta * uo.values**2 * ui.values
        mask = _dirichlet_mask(u)
        g = np.where(mask, g, 0.0)
        out.append(Field(u.grid, g))
    return Pair(out[0], out[1])


def grad_E_scalar(u: Field, component: int, params: PhysParams) -> Field:
    """Strong-form gradient of the single-component energy."""
    lam, mu, alpha = params.lam(component), params.mu(component), params.alpha(component)
    a = apply_operator(u, lam, params.epsilon)
    g = a.values - alpha * _signed_power(u.values, params.p - 1.0) - mu * u.values**3
    mask = _field_dirichlet_mask(u)
    return Field(u.grid, np.where(mask, g, 0.0))


def _field_dirichlet_mask(f: Field) -> np.ndarray:
    gr = f.grid
    if isinstance(gr, RadialGrid):
        mask = np.ones(gr.n + 1, dtype=bool)
        mask[-1] = False
        return mask
    return gr.interior_bool


def _dirichlet_mask(u: Pair) -> np.ndarray:
    return _field_dirichlet_mask(u.u1)


def residual_norm(g: Field) -> float:
    """Quadrature L^2 norm of a gradient field."""
    return math.sqrt(max(inner_l2(g, g), 0.0))


# ----------------------------------------------------------------------
# dilation-identity diagnostic
# ----------------------------------------------------------------------

def pohozaev_residual(u: Field, lam: float, mu: float, alpha: float, p: float) -> float:
    """P(u) = |grad u|_2^2 + 2 lam |u|_2^2 - mu |u|_4^4 - (4 alpha/p) B_p.

    Vanishes on entire solutions of -Lap u + lam u = mu u^3 + alpha u^{p-1}
    (dilation identity in R^4).  With alpha = 0 it equals lam*|u|_2^2 on
    members of the single-component constraint set, which is bounded away
    from zero: the numerical witness that no entire solution exists there.
    """
    grad2 = dirichlet_form(u, u)
    return (grad2 + 2.0 * lam * integrate_power(u, 2.0)
            - mu * integrate_power(u, 4.0)
            - 4.0 * alpha / p * integrate_power(u, p))


# ----------------------------------------------------------------------
# two-center interaction integral
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class InteractionResult:
    value: float
    truncated: bool

    def __float__(self) -> float:
        return self.value


def interaction_I(v1_r: np.ndarray, v1: np.ndarray,
                  v2_r: np.ndarray, v2: np.ndarray,
                  d: float, eps: float,
                  pad: float | None = None,
                  h_quad: float | None = None) -> InteractionResult:
    """integral over R^4 of v1(x)^2 v2(x - (d/eps) e1)^2.

    The radial profiles (r, value) are placed on the xi axis at 0 and
    d/eps and integrated with the axisymmetric rule 4*pi*rho^2 drho dxi.
    A truncation flag is raised when either profile still carries
    non-negligible mass at the edge of its data.
    """
    if d < 0.0 or eps <= 0.0:
        raise ValueError("need d >= 0 and eps > 0")
    D = d / eps
    r1max, r2max = float(v1_r[-1]), float(v2_r[-1])
    peak1 = float(np.max(np.abs(v1))) or 1.0
    peak2 = float(np.max(np.abs(v2))) or 1.0
    truncated = (abs(v1[-1]) > 1e-10 * peak1) or (abs(v2[-1]) > 1e-10 * peak2)
    pad = pad if pad is not None else min(max(r1max, r2max), 0.75 * (r1max + r2max))
    h = h_quad if h_quad is not None else max(min(r1max, r2max) / 2000.0, 1e-3)
    xi = np.arange(-pad, D + pad + h, h)
    rho = np.arange(0.0, pad + h, h)
    wxi = np.full(xi.size, h)
    wxi[0] = wxi[-1] = h / 2.0
    wr = np.full(rho.size, h)
    wr[0] = wr[-1] = h / 2.0
    rho2w = rho * rho * wr
    total = 0.0
    chunk = max(1, int(4e6 // rho.size))
    for start in range(0, xi.size, chunk):
        xs = xi[start:start + chunk, None]
        rr1 = np.sqrt(xs * xs + rho[None, :] ** 2)
        rr2 = np.sqrt((xs - D) ** 2 + rho[None, :] ** 2)
        f1 = np.interp(rr1, v1_r, v1, right=0.0)
        f2 = np.interp(rr2, v2_r, v2, right=0.0)
        integ = (f1 * f1) * (f2 * f2)
        total += float(wxi[start:start + chunk] @ (integ @ rho2w))
    return InteractionResult(4.0 * math.pi * total, truncated)


def interaction_I_fields(v1: Field, v2: Field, d: float, eps: float,
                         **kw) -> InteractionResult:
    g1, g2 = v1.grid, v2.grid
    if not isinstance(g1, RadialGrid) or not isinstance(g2, RadialGrid):
        raise ValueError("interaction_I expects radial profiles")
    return interaction_I(g1.r, v1.values, g2.r, v2.values, d, eps, **kw)


# ----------------------------------------------------------------------
# boundary deficit of the entire profile on a ball
# ----------------------------------------------------------------------

def delta_eps(deficit1: float, deficit2: float, I: float) -> float:
    """Pointwise interaction measure: deficit_1 + deficit_2 + I."""
    if min(deficit1, deficit2, I) < 0.0:
        raise ValueError("delta_eps takes nonnegative inputs")
    return deficit1 + deficit2 + I


def delta_eps_envelope(dists: tuple[float, float], lams: tuple[float, float],
                       eps: float, I: float, sigma: float = 0.1) -> tuple[float, float]:
    """Two-sided envelope (unit constants) for delta_eps off a centered ball.

    Lower/upper use rates -2(1+sigma) and -2(1-sigma) times sqrt(lam_i)
    times dist(P_i, boundary) / eps.  Labeled an envelope: the true
    prefactors are not computed.
    """
    lo = sum(math.exp(-2.0 * (1.0 + sigma) * math.sqrt(l) * d / eps)
             for l, d in zip(lams, dists)) + I
    hi = sum(math.exp(-2.0 * (1.0 - sigma) * math.sqrt(l) * d / eps)
             for l, d in zip(lams, dists)) + I
    return lo, hi


def boundary_deficit(lam: float, mu: float, alpha: float, p: float,
                     eps: float, ball_radius: float,
                     profile: tuple[np.ndarray, np.ndarray] | None = None,
                     n: int | None = None) -> float:
    """Deficit (v0 - u)(0) of the linear Dirichlet companion problem.

    u solves -Lap u + lam u = mu v0^3 + alpha v0^{p-1} on the rescaled ball
    of radius ball_radius/eps with zero boundary values, where v0 is the
    entire ground-state profile of the same coefficients.  Since v0 solves
    the same equation on all of space, the deficit phi = v0 - u satisfies
    the homogeneous problem -Lap phi + lam phi = 0 with boundary trace
    v0(R); that formulation is solved here (it avoids resolving the spike
    core, whose quadrature bias would swamp the exponentially small
    answer).  The deficit is positive and decays like
    exp(-2 sqrt(lam) ball_radius / eps).
    """
    if profile is None:
        from .groundstate import shooting_oracle  # local import, avoids a cycle
        sres = shooting_oracle(lam, mu, alpha, p, r_max=max(2.5 * ball_radius / eps, 30.0 / math.sqrt(lam)))
        profile = (sres.r, sres.u)
    r_src, u_src = profile
    R = ball_radius / eps
    if r_src[-1] < R:
        raise ValueError("entire profile does not cover the rescaled ball")
    nn = n if n is not None else max(int(R * 40.0 * math.sqrt(lam)), 800)
    grid = RadialGrid(R, nn)
    v0_R = float(np.interp(R, r_src, u_src))
    from .opcache import OperatorCache  # local import, avoids a cycle
    cache = OperatorCache(grid, lam, 1.0)
    b = np.zeros(grid.n)
    b[-1] = (TWO_PI2 / grid.h) * grid.mid3[grid.n - 1] * v0_R
    phi = cache.solve_K(b)
    return float(phi[0])
