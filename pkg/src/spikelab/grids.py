"""Radial (1-D) and axisymmetric (2-D) discretizations of R^4 domains.

Both grids use conservative (finite-volume) differencing with exact
cell-moment node weights.  This makes three things hold to machine
precision, which the energy/membership machinery relies on:

  * quadrature of 1 over a ball is exactly pi^2/2 * R^4 * ... (the 4-ball
    volume), because node weights are exact integrals of r^3 over cells;
  * the discrete operator A = -eps^2*Lap_h + lambda and the discrete H^1
    form are exact duals:  <A f, g>_W = eps^2 D(f,g) + lambda <f,g>_W for
    all fields vanishing on Dirichlet nodes;
  * consequently membership residuals computed from norms agree with the
    quadrature pairing of the strong-form gradient exactly.

Radial grid: nodes r_j = j*h, j = 0..n, h = R/n.  Laplacian in radial form
f'' + (3/r) f', with the axis limit 4 f''(0) built into the conservative
axis cell.  Axisymmetric grid: x = (xi, y) in R x R^3 with |y| = rho;
volume element 4*pi*rho^2 drho dxi; Laplacian d2_xi + d2_rho + (2/rho)d_rho
with the axis limit contribution 3*d2_rho at rho = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import IO

import numpy as np

from . import _kernels as K

TWO_PI2 = 2.0 * math.pi**2
FOUR_PI = 4.0 * math.pi


# ----------------------------------------------------------------------
# grids
# ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Uniform radial grid on the ball of radius R; node r_n is Dirichlet."""

    R: float
    n: int

    def __post_init__(self):
        if self.R <= 0.0 or self.n < 4:
            raise ValueError("RadialGrid needs R > 0 and n >= 4")

    @cached_property
    def h(self) -> float:
        return self.R / self.n

    @cached_property
    def r(self) -> np.ndarray:
        return np.linspace(0.0, self.R, self.n + 1)

    @cached_property
    def mid3(self) -> np.ndarray:
        """r_{j+1/2}^3 flux weights, length n."""
        return ((self.r[:-1] + self.r[1:]) / 2.0) ** 3

    @cached_property
    def cellmom(self) -> np.ndarray:
        """Exact integral of r^3 over the node cells (length n+1).

        Cells: [0, h/2], [r_j - h/2, r_j + h/2], [R - h/2, R].
        """
        edges = np.concatenate(([0.0], (self.r[:-1] + self.r[1:]) / 2.0, [self.R]))
        q = edges**4 / 4.0
        return np.diff(q)

    @cached_property
    def weights(self) -> np.ndarray:
        """Quadrature weights for integration over the 4-ball."""
        return TWO_PI2 * self.cellmom

    @property
    def num_nodes(self) -> int:
        return self.n + 1

    def zeros(self) -> "Field":
        return Field(self, np.zeros(self.n + 1))

    def field_from_function(self, fn) -> "Field":
        vals = np.asarray(fn(self.r), dtype=float)
        return Field(self, vals)


@dataclass(frozen=True, eq=False)
class AxiGrid:
    """Tensor grid in (xi, rho) for axially symmetric fields on R x R^3.

    The rectangle is [-L, L] x [0, rho_max].  An optional ball mask
    restricts the domain to xi^2 + rho^2 < ball_radius^2 (Dirichlet on all
    other nodes; staircase boundary).  rho = 0 is the symmetry axis and
    carries the natural no-flux condition.
    """

    L: float
    n_x: int
    rho_max: float
    n_rho: int
    ball_radius: float | None = None

    def __post_init__(self):
        if self.L <= 0 or self.rho_max <= 0 or self.n_x < 4 or self.n_rho < 4:
            raise ValueError("AxiGrid needs positive extents and >= 4 cells")

    @cached_property
    def hx(self) -> float:
        return 2.0 * self.L / self.n_x

    @cached_property
    def hr(self) -> float:
        return self.rho_max / self.n_rho

    @cached_property
    def xi(self) -> np.ndarray:
        return np.linspace(-self.L, self.L, self.n_x + 1)

    @cached_property
    def rho(self) -> np.ndarray:
        return np.linspace(0.0, self.rho_max, self.n_rho + 1)

    @cached_property
    def lxi(self) -> np.ndarray:
        """xi cell lengths (trapezoid: half cells at the ends)."""
        out = np.full(self.n_x + 1, self.hx)
        out[0] = out[-1] = self.hx / 2.0
        return out

    @cached_property
    def prho(self) -> np.ndarray:
        """Exact integral of rho^2 over the rho cells (length n_rho+1)."""
        edges = np.concatenate(([0.0], (self.rho[:-1] + self.rho[1:]) / 2.0, [self.rho_max]))
        q = edges**3 / 3.0
        return np.diff(q)

    @cached_property
    def mrho(self) -> np.ndarray:
        """rho_{b+1/2}^2 flux weights, length n_rho."""
        return ((self.rho[:-1] + self.rho[1:]) / 2.0) ** 2

    @cached_property
    def weights(self) -> np.ndarray:
        """2-D quadrature weights, shape (n_x+1, n_rho+1)."""
        return FOUR_PI * np.outer(self.lxi, self.prho)

    @cached_property
    def interior(self) -> np.ndarray:
        """Boolean mask of non-Dirichlet nodes (uint8 for the kernels)."""
        mask = np.zeros((self.n_x + 1, self.n_rho + 1), dtype=np.uint8)
        mask[1:-1, :-1] = 1
        if self.ball_radius is not None:
            rr = np.add.outer(self.xi**2, self.rho**2)
            mask &= (rr < self.ball_radius**2).astype(np.uint8)
        return mask

    @cached_property
    def interior_bool(self) -> np.ndarray:
        return self.interior.astype(bool)

    @property
    def num_nodes(self) -> int:
        return (self.n_x + 1) * (self.n_rho + 1)

    def zeros(self) -> "Field":
        return Field(self, np.zeros((self.n_x + 1, self.n_rho + 1)))

    def field_from_function(self, fn) -> "Field":
        XI, RHO = np.meshgrid(self.xi, self.rho, indexing="ij")
        vals = np.asarray(fn(XI, RHO), dtype=float)
        vals = np.where(self.interior_bool, vals, 0.0)
        return Field(self, vals)


Grid = RadialGrid | AxiGrid


# ----------------------------------------------------------------------
# fields
# ----------------------------------------------------------------------

@dataclass(eq=False)
class Field:
    """One real value per grid node."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        expected = (self.grid.n + 1,) if isinstance(self.grid, RadialGrid) \
            else (self.grid.n_x + 1, self.grid.n_rho + 1)
        if self.values.shape != expected:
            raise ValueError(f"field shape {self.values.shape} != grid shape {expected}")

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())

    def __add__(self, other: "Field") -> "Field":
        _same_grid(self, other)
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        _same_grid(self, other)
        return Field(self.grid, self.values - other.values)

    def __mul__(self, c: float) -> "Field":
        return Field(self.grid, self.values * float(c))

    __rmul__ = __mul__

    @property
    def linf(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass(eq=False)
class Pair:
    """Two fields on one grid (the two components)."""

    u1: Field
    u2: Field

    def __post_init__(self):
        if self.u1.grid is not self.u2.grid:
            raise ValueError("pair components must share one grid")

    @property
    def grid(self) -> Grid:
        return self.u1.grid

    def component(self, i: int) -> Field:
        return self.u1 if i == 1 else self.u2

    def copy(self) -> "Pair":
        return Pair(self.u1.copy(), self.u2.copy())

    def scale(self, t1: float, t2: float) -> "Pair":
        return Pair(self.u1 * t1, self.u2 * t2)


def _same_grid(f: Field, g: Field) -> None:
    if f.grid is not g.grid:
        raise ValueError("fields live on different grids")


# ----------------------------------------------------------------------
# quadrature and differential operators
# ----------------------------------------------------------------------

def integrate_power(f: Field, q: float) -> float:
    """Integral of |f|^q over the discretized 4-D domain."""
    if q < 1.0:
        raise ValueError("q >= 1 required")
    return K.wsum_pow(f.grid.weights, f.values, float(q))


def inner_l2(f: Field, g: Field) -> float:
    _same_grid(f, g)
    return K.wdot(f.grid.weights, f.values, g.values)


def coupling_integral(p: Pair) -> float:
    """Integral of u1^2 u2^2."""
    w = p.grid.weights
    return K.wdot4(w, p.u1.values, p.u1.values, p.u2.values, p.u2.values)


def dirichlet_form(f: Field, g: Field) -> float:
    """Discrete integral of grad f . grad g (the gradient part of H^1)."""
    _same_grid(f, g)
    gr = f.grid
    if isinstance(gr, RadialGrid):
        return TWO_PI2 * K.radial_dirichlet(f.values, g.values, gr.mid3, gr.h)
    return FOUR_PI * K.axi_dirichlet(f.values, g.values, gr.hx, gr.hr,
                                     gr.prho, gr.mrho, gr.lxi)


def h1_product(f: Field, g: Field, lam: float, eps: float) -> float:
    """eps-weighted H^1 inner product: eps^2 * D(f,g) + lam * <f,g>."""
    return eps * eps * dirichlet_form(f, g) + lam * inner_l2(f, g)


def apply_operator(f: Field, lam: float, eps: float) -> Field:
    """Strong form (-eps^2*Lap + lam) f; Dirichlet rows are zero."""
    gr = f.grid
    eps2 = eps * eps
    if isinstance(gr, RadialGrid):
        out = K.radial_apply(f.values, lam, eps2, gr.mid3, gr.cellmom, gr.h)
        return Field(gr, out)
    out = K.axi_apply(f.values, lam, eps2, gr.hx, gr.hr, gr.prho, gr.mrho, gr.interior)
    return Field(gr, out)


# ----------------------------------------------------------------------
# locating maxima and rescaling
# ----------------------------------------------------------------------

def max_point(f: Field) -> tuple[np.ndarray, float]:
    """Node of maximal value as a point in R^4, with the value.

    Ties break to the smallest radius (radial) or lexicographically to the
    smallest (rho, xi) (axisymmetric), so spike traces are reproducible.
    """
    gr = f.grid
    vmax = float(np.max(f.values))
    if isinstance(gr, RadialGrid):
        j = int(np.flatnonzero(f.values == vmax)[0])
        return np.array([gr.r[j], 0.0, 0.0, 0.0]), vmax
    locs = np.argwhere(f.values == vmax)
    order = np.lexsort((gr.xi[locs[:, 0]], gr.rho[locs[:, 1]]))
    a, b = locs[order[0]]
    return np.array([gr.xi[a], gr.rho[b], 0.0, 0.0]), vmax


@dataclass
class RescaleResult:
    field: Field
    truncated: bool


def rescale_to_reference(u: Field, center: np.ndarray, eps: float,
                         ref: RadialGrid) -> RescaleResult:
    """Blow-up map v(y) = u(center + eps*y) sampled onto a radial grid.

    Radial sources require |center| = 0.  Axisymmetric sources require the
    center on the symmetry axis; the profile is read along the transverse
    ray (which stays clear of a second spike on the axis).  Linear
    interpolation; values beyond the available data are zero-filled and the
    truncation flag is set.
    """
    center = np.asarray(center, dtype=float)
    gr = u.grid
    radii = ref.r * eps
    if isinstance(gr, RadialGrid):
        if abs(center[0]) > 1e-12 or np.any(np.abs(center[1:]) > 1e-12):
            raise ValueError("radial rescale requires the center at the origin")
        truncated = bool(radii[-1] > gr.R + 1e-12)
        vals = np.interp(radii, gr.r, u.values, right=0.0)
        return RescaleResult(Field(ref, vals), truncated)
    xi0, rho0 = center[0], center[1]
    if abs(rho0) > gr.hr / 2.0 + 1e-12:
        raise ValueError("axisymmetric rescale requires the center on the axis")
    a0 = int(round((xi0 + gr.L) / gr.hx))
    ray = u.values[a0, :]
    truncated = bool(radii[-1] > gr.rho[-1] + 1e-12)
    if gr.ball_radius is not None:
        avail = math.sqrt(max(gr.ball_radius**2 - xi0**2, 0.0))
        truncated = truncated or radii[-1] > avail + 1e-12
    vals = np.interp(radii, gr.rho, ray, right=0.0)
    return RescaleResult(Field(ref, vals), truncated)


def resample_from_profile(r_src: np.ndarray, u_src: np.ndarray,
                          grid: RadialGrid) -> Field:
    """Linear interpolation of a 1-D radial profile onto a radial grid."""
    vals = np.interp(grid.r, r_src, u_src, right=0.0)
    vals[-1] = 0.0
    return Field(grid, vals)


# ----------------------------------------------------------------------
# profile dumps (the plotting contract)
# ----------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def dump_profile_csv(stream: IO[str], p: Pair) -> None:
    """CSV dump: (r,u1,u2) for radial grids, (xi,rho,u1,u2) for axisymmetric."""
    gr = p.grid
    if isinstance(gr, RadialGrid):
        stream.write("r,u1,u2\n")
        for j in range(gr.n + 1):
            stream.write(f"{_fmt(gr.r[j])},{_fmt(p.u1.values[j])},{_fmt(p.u2.values[j])}\n")
        return
    stream.write("xi,rho,u1,u2\n")
    for a in range(gr.n_x + 1):
        for b in range(gr.n_rho + 1):
            stream.write(
                f"{_fmt(gr.xi[a])},{_fmt(gr.rho[b])},"
                f"{_fmt(p.u1.values[a, b])},{_fmt(p.u2.values[a, b])}\n"
            )
