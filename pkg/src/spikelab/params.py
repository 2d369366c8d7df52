"""Model coefficients, validation, and the subcritical-term cutoff.

The model is the two-component system

    -eps^2 Lap u_i + lambda_i u_i
        = mu_i u_i^3 + alpha_i u_i^(p-1) + beta u_{3-i}^2 u_i      (i = 1, 2)

on a bounded domain in R^4 with zero boundary values, 2 < p < 4.  In the
strongly competitive regime (beta <= -sqrt(mu1*mu2)) the subcritical terms
of the energy are multiplied by a smooth cutoff chi of the scaled squared
norm; chi must be 1 on [0,1], 0 on [2,inf) and have derivative in [-2,0].
The concrete interpolant is the C^2 quintic smoothstep, whose derivative
range is [-1.875, 0] (inside the required band).  Every report records
this choice under the key ``cutoff_interpolant``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

#: Sharp H^1(R^4) -> L^4 embedding ratio, attained by the explicit extremal
#: profile 2*sqrt(2)*s / (s^2 + |x|^2).  Its square is 32*pi^2/3.  Used as
#: the default scale when the truncation level T is auto-selected; the
#: numerical estimate in groundstate.sobolev_constant() cross-checks it.
SOBOLEV_RATIO_4D: float = math.sqrt(32.0 * math.pi**2 / 3.0)

#: Identifier of the cutoff interpolant, echoed into every report.
CUTOFF_INTERPOLANT: str = "quintic-smoothstep"

PARAM_KEYS = (
    "lambda1", "lambda2", "mu1", "mu2",
    "alpha1", "alpha2", "beta", "p", "epsilon", "T",
)


@dataclass(frozen=True)
class PhysParams:
    """All model coefficients.  T = None means auto-select via choose_T."""

    lambda1: float = 1.0
    lambda2: float = 1.0
    mu1: float = 1.0
    mu2: float = 1.0
    alpha1: float = 1.0
    alpha2: float = 1.0
    beta: float = 0.1
    p: float = 3.0
    epsilon: float = 1.0
    T: float | None = None

    def lam(self, i: int) -> float:
        return self.lambda1 if i == 1 else self.lambda2

    def mu(self, i: int) -> float:
        return self.mu1 if i == 1 else self.mu2

    def alpha(self, i: int) -> float:
        return self.alpha1 if i == 1 else self.alpha2

    @property
    def mu_geom(self) -> float:
        return math.sqrt(self.mu1 * self.mu2)

    @property
    def cutoff_active(self) -> bool:
        """The cutoff is nontrivial only in the strongly competitive regime."""
        return self.beta <= -self.mu_geom

    def resolved_T(self, sobolev_s: float | None = None) -> float:
        if self.T is not None:
            return self.T
        return choose_T(self, sobolev_s if sobolev_s is not None else SOBOLEV_RATIO_4D)

    def with_epsilon(self, eps: float) -> "PhysParams":
        return replace(self, epsilon=eps)

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in PARAM_KEYS}
        if d["T"] is None:
            del d["T"]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PhysParams":
        unknown = set(d) - set(PARAM_KEYS)
        if unknown:
            raise ValueError(f"unknown parameter keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in d.items()})


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate(params: PhysParams) -> ValidationReport:
    """Report every violated coefficient constraint (empty tuple = valid).

    alpha_i = 0 is admitted here (needed by the dilation-identity
    diagnostics); solver entry points separately reject alpha1 = alpha2 = 0.
    """
    v: list[str] = []
    if not (2.0 < params.p < 4.0):
        v.append("p must lie in (2,4)")
    for i in (1, 2):
        if params.lam(i) <= 0.0:
            v.append(f"lambda{i} > 0 required")
        if params.mu(i) <= 0.0:
            v.append(f"mu{i} > 0 required")
        if params.alpha(i) < 0.0:
            v.append(f"alpha{i} >= 0 required")
    if params.epsilon <= 0.0:
        v.append("epsilon > 0 required")
    if params.T is not None and params.T <= 0.0:
        v.append("T > 0 required")
    return ValidationReport(tuple(v))


def choose_T(params: PhysParams, sobolev_s: float) -> float:
    """Minimal admissible truncation level:

        T = sqrt( (16 + sum_i 4p / (mu_i (p-2))) * S^2 ).
    """
    if params.p <= 2.0:
        raise ValueError("choose_T requires p > 2")
    if sobolev_s <= 0.0:
        raise ValueError("sobolev_s must be positive")
    s2 = sobolev_s * sobolev_s
    total = 16.0 + sum(4.0 * params.p / (params.mu(i) * (params.p - 2.0)) for i in (1, 2))
    return math.sqrt(total * s2)


def quintic_step(tau):
    """C^2 smoothstep: 0 at tau<=0, 1 at tau>=1, 10t^3 - 15t^4 + 6t^5 between."""
    t = np.clip(np.asarray(tau, dtype=float), 0.0, 1.0)
    out = t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    return out if out.ndim else float(out)


def quintic_step_prime(tau):
    """Derivative of quintic_step (zero outside (0,1), peak 1.875 at 1/2)."""
    t = np.asarray(tau, dtype=float)
    inside = (t > 0.0) & (t < 1.0)
    tc = np.clip(t, 0.0, 1.0)
    out = np.where(inside, 30.0 * tc * tc * (1.0 - tc) ** 2, 0.0)
    return out if out.ndim else float(out)


def chi(s, params: PhysParams):
    """Cutoff value at scaled squared norm s (>= 0).

    Identically 1 unless beta <= -sqrt(mu1*mu2); then 1 on [0,1], 0 on
    [2,inf) and the descending quintic smoothstep on (1,2).
    """
    arr = np.asarray(s, dtype=float)
    if np.any(arr < 0.0):
        raise ValueError("chi argument must be nonnegative")
    if not params.cutoff_active:
        out = np.ones_like(arr)
        return out if out.ndim else 1.0
    out = 1.0 - quintic_step(arr - 1.0)
    return out if np.ndim(out) else float(out)


def chi_prime(s, params: PhysParams):
    """Derivative of chi; lies in [-1.875, 0] (within the required [-2, 0])."""
    arr = np.asarray(s, dtype=float)
    if np.any(arr < 0.0):
        raise ValueError("chi argument must be nonnegative")
    if not params.cutoff_active:
        out = np.zeros_like(arr)
        return out if out.ndim else 0.0
    out = -quintic_step_prime(arr - 1.0)
    return out if np.ndim(out) else float(out)
