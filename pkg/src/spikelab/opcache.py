"""Factorized solves with the operator A = -eps^2*Lap + lam.

The stiffness matrix K is assembled so that  <A f, g>_W = f^T K g  on
fields vanishing at Dirichlet nodes (K = eps^2 * gradient form + lam *
diag(W), restricted to interior nodes).  Solving A x = b then means
K x = W .* b.  Radial grids use a banded Cholesky factorization, the
axisymmetric grid a sparse LU; both are factorized once per (grid, lam,
eps) and reused across solver iterations.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grids import FOUR_PI, TWO_PI2, AxiGrid, Field, RadialGrid


class OperatorCache:
    """Holds the factorization of K for one (grid, lam, eps)."""

    def __init__(self, grid, lam: float, eps: float):
        self.grid = grid
        self.lam = float(lam)
        self.eps = float(eps)
        if isinstance(grid, RadialGrid):
            self._init_radial(grid)
        elif isinstance(grid, AxiGrid):
            self._init_axi(grid)
        else:
            raise TypeError(f"unsupported grid {type(grid)!r}")

    # -- radial: tridiagonal, banded Cholesky --------------------------

    def _init_radial(self, grid: RadialGrid) -> None:
        n = grid.n
        e2 = self.eps * self.eps
        cg = e2 * TWO_PI2 / grid.h
        w = grid.weights[:n]
        diag = self.lam * w.copy()
        diag += cg * grid.mid3[:n]                # edge to the right neighbor
        diag[1:] += cg * grid.mid3[: n - 1]       # edge to the left neighbor
        off = -cg * grid.mid3[: n - 1]            # couples j and j+1, j <= n-2
        ab = np.zeros((2, n))
        ab[0, 1:] = off
        ab[1, :] = diag
        self._cho = sla.cholesky_banded(ab, lower=False)
        self._w_int = w
        self._diag = diag
        self._off = off

    # -- axisymmetric: sparse LU ---------------------------------------

    def _init_axi(self, grid: AxiGrid) -> None:
        interior = grid.interior_bool
        idx = -np.ones(interior.shape, dtype=np.int64)
        ii = np.argwhere(interior)
        idx[interior] = np.arange(ii.shape[0])
        nint = ii.shape[0]
        e2 = self.eps * self.eps
        w2 = grid.weights
        rows, cols, vals = [], [], []
        diag = self.lam * w2[interior]

        def add_edge(a0, b0, a1, b1, c):
            i, j = idx[a0, b0], idx[a1, b1]
            if i >= 0:
                rows.append(i); cols.append(i); vals.append(c)
            if j >= 0:
                rows.append(j); cols.append(j); vals.append(c)
            if i >= 0 and j >= 0:
                rows.append(i); cols.append(j); vals.append(-c)
                rows.append(j); cols.append(i); vals.append(-c)

        cx = FOUR_PI * e2 / grid.hx
        for a in range(grid.n_x):
            for b in range(grid.n_rho + 1):
                if interior[a, b] or interior[a + 1, b]:
                    add_edge(a, b, a + 1, b, cx * grid.prho[b])
        cr = FOUR_PI * e2 / grid.hr
        for a in range(grid.n_x + 1):
            la = grid.lxi[a]
            for b in range(grid.n_rho):
                if interior[a, b] or interior[a, b + 1]:
                    add_edge(a, b, a, b + 1, cr * la * grid.mrho[b])

        K = sp.coo_matrix((vals, (rows, cols)), shape=(nint, nint)).tocsc()
        K += sp.diags(diag).tocsc()
        self._K = K
        self._idx = idx
        self._interior = interior
        self._w_int = w2[interior]
        self._lu = None
        self._amg = None
        if nint <= 200_000:
            self._lu = spla.splu(K)
        else:
            # very large grids: algebraic multigrid (SPD 5-point structure);
            # exact factorization would blow up on fill-in
            import pyamg

            self._amg = pyamg.smoothed_aggregation_solver(K.tocsr(), max_coarse=400)

    def _solve_axi_interior(self, b: np.ndarray) -> np.ndarray:
        if self._lu is not None:
            return self._lu.solve(b)
        return self._amg.solve(b, tol=1e-10, accel="cg", maxiter=200)

    # -- solves ---------------------------------------------------------

    def solve_rhs(self, rhs: np.ndarray) -> np.ndarray:
        """Solve A u = rhs (strong form); returns full-shape nodal values."""
        gr = self.grid
        if isinstance(gr, RadialGrid):
            b = self._w_int * np.asarray(rhs, dtype=float)[: gr.n]
            x = sla.cho_solve_banded((self._cho, False), b)
            out = np.zeros(gr.n + 1)
            out[: gr.n] = x
            return out
        b = self._w_int * np.asarray(rhs, dtype=float)[self._interior]
        x = self._solve_axi_interior(b)
        out = np.zeros(self._interior.shape)
        out[self._interior] = x
        return out

    def solve_field(self, f: Field) -> Field:
        return Field(self.grid, self.solve_rhs(f.values))

    def solve_K(self, b_interior: np.ndarray) -> np.ndarray:
        """Solve K x = b on interior nodes (raw stiffness system)."""
        gr = self.grid
        if isinstance(gr, RadialGrid):
            x = sla.cho_solve_banded((self._cho, False), np.asarray(b_interior, dtype=float))
            out = np.zeros(gr.n + 1)
            out[: gr.n] = x
            return out
        x = self._solve_axi_interior(np.asarray(b_interior, dtype=float))
        out = np.zeros(self._interior.shape)
        out[self._interior] = x
        return out

    # -- Jacobian machinery for Newton polish ---------------------------

    def interior_mask(self) -> np.ndarray:
        gr = self.grid
        if isinstance(gr, RadialGrid):
            m = np.ones(gr.n + 1, dtype=bool)
            m[-1] = False
            return m
        return self._interior

    def K_sparse(self) -> sp.csc_matrix:
        """Stiffness K (interior x interior) with <A f, g>_W = f^T K g."""
        gr = self.grid
        if isinstance(gr, AxiGrid):
            return self._K
        K = getattr(self, "_K_radial", None)
        if K is None:
            n = gr.n
            K = sp.diags([self._off, self._diag, self._off], [-1, 0, 1],
                         shape=(n, n), format="csc")
            self._K_radial = K
        return K

    def w_interior(self) -> np.ndarray:
        return self._w_int

    def solve_shifted(self, c_full: np.ndarray, rhs_full: np.ndarray) -> np.ndarray:
        """Solve (A - diag(c)) x = rhs (strong form), i.e. the W-weighted
        system (K - diag(W c)) x = W rhs.  Used by Newton polish."""
        gr = self.grid
        if isinstance(gr, RadialGrid):
            n = gr.n
            wc = self._w_int * np.asarray(c_full, dtype=float)[:n]
            ab = np.zeros((3, n))
            ab[0, 1:] = self._off
            ab[1, :] = self._diag - wc
            ab[2, :-1] = self._off
            b = self._w_int * np.asarray(rhs_full, dtype=float)[:n]
            x = sla.solve_banded((1, 1), ab, b)
            out = np.zeros(n + 1)
            out[:n] = x
            return out
        wc = self._w_int * np.asarray(c_full, dtype=float)[self._interior]
        J = self._K - sp.diags(wc)
        b = self._w_int * np.asarray(rhs_full, dtype=float)[self._interior]
        x = spla.splu(J.tocsc()).solve(b)
        out = np.zeros(self._interior.shape)
        out[self._interior] = x
        return out


_CACHE: dict[tuple[int, float, float], OperatorCache] = {}


def operator_cache(grid, lam: float, eps: float) -> OperatorCache:
    key = (id(grid), float(lam), float(eps))
    cache = _CACHE.get(key)
    if cache is None or cache.grid is not grid:
        cache = OperatorCache(grid, lam, eps)
        _CACHE[key] = cache
        if len(_CACHE) > 64:
            _CACHE.pop(next(iter(_CACHE)))
    return cache
