"""Pure-numpy reference implementations of the hot kernels.

These are the fallback used when the compiled extension is unavailable and
the parity oracle the extension is tested against.  All routines operate on
raw float64 arrays; geometric factors (2*pi^2, 4*pi) are applied by the
grid layer, not here.

Conventions for the radial grid (nodes r_j = j*h, j = 0..n):
  mid[j]  = r_{j+1/2}^3                     (flux weights, length n)
  cell[j] = integral of r^3 over cell j     (node weights, length n+1)
and for the axisymmetric grid (xi_a, rho_b):
  prho[b]  = integral of rho^2 over cell b  (length nr+1)
  mrho[b]  = rho_{b+1/2}^2                  (length nr)
"""

from __future__ import annotations

import math

import numpy as np

HAVE_COMPILED = False


def radial_apply(u, lam, eps2, mid, cell, h, out=None):
    """(-eps^2*Lap + lam) u in conservative form; last node forced to 0."""
    u = np.asarray(u)
    if out is None:
        out = np.empty_like(u)
    flux = mid * np.diff(u)  # m_j * (u_{j+1} - u_j), length n
    out[0] = lam * u[0] - eps2 * flux[0] / (cell[0] * h)
    out[1:-1] = lam * u[1:-1] - eps2 * (flux[1:] - flux[:-1]) / (cell[1:-1] * h)
    out[-1] = 0.0
    return out


def radial_dirichlet(u, v, mid, h):
    """Sum_j mid[j] * du_j * dv_j / h (the gradient part of the H^1 form)."""
    return float(np.dot(mid, np.diff(u) * np.diff(v)) / h)


def axi_apply(u, lam, eps2, hx, hr, prho, mrho, interior, out=None):
    """5-point conservative stencil on the (xi, rho) rectangle.

    Rows outside `interior` (Dirichlet nodes, incl. any domain mask) are 0.
    `interior` must exclude the rectangle edges.
    """
    u = np.asarray(u)
    interior = np.asarray(interior, dtype=bool)
    if out is None:
        out = np.zeros_like(u)
    else:
        out.fill(0.0)
    d2xi = np.zeros_like(u)
    d2xi[1:-1, :] = (u[2:, :] - 2.0 * u[1:-1, :] + u[:-2, :]) / (hx * hx)
    drho = np.zeros_like(u)
    fr = mrho[None, :] * (u[:, 1:] - u[:, :-1])  # flux at rho half nodes
    drho[:, 0] = fr[:, 0] / (prho[0] * hr)
    drho[:, 1:-1] = (fr[:, 1:] - fr[:, :-1]) / (prho[1:-1] * hr)
    lap = d2xi + drho
    np.subtract(lam * u, eps2 * lap, out=out, where=interior)
    return out


def axi_dirichlet(u, v, hx, hr, prho, mrho, lxi):
    """Gradient part of the axisymmetric H^1 form (without the 4*pi)."""
    dxi = (u[1:, :] - u[:-1, :]) * (v[1:, :] - v[:-1, :])
    term_x = float(np.dot(dxi.sum(axis=0), prho)) / hx
    drho = (u[:, 1:] - u[:, :-1]) * (v[:, 1:] - v[:, :-1])
    term_r = float(np.dot(lxi, drho @ mrho)) / hr
    return term_x + term_r


def wsum_pow(w, u, q):
    """Sum_j w_j |u_j|^q."""
    au = np.abs(u)
    if q == 2.0:
        return float(np.dot(w.ravel(), (u * u).ravel()))
    if q == 4.0:
        u2 = u * u
        return float(np.dot(w.ravel(), (u2 * u2).ravel()))
    return float(np.dot(w.ravel(), (au**q).ravel()))


def wdot(w, u, v):
    return float(np.dot(w.ravel(), (u * v).ravel()))


def wdot4(w, a, b, c, d):
    """Sum_j w_j a_j b_j c_j d_j (coupling integrals)."""
    return float(np.dot(w.ravel(), (a * b * c * d).ravel()))


def _shoot_rhs(r, u, w, lam, mu, alpha, p):
    f = lam * u - mu * u * u * u - alpha * math.copysign(abs(u) ** (p - 1.0), u)
    return w, f - 3.0 * w / r


def shoot_classify(lam, mu, alpha, p, a, h, r_max):
    """March the radial profile ODE from u(0)=a; classify the trajectory.

    Returns (code, r_stop): code 1 = crossed zero (start value too large),
    code 2 = turned upward while positive (too small), 0 = no event by r_max.
    """
    r = h
    c0 = (lam * a - mu * a**3 - alpha * a ** (p - 1.0)) / 4.0
    u = a + 0.5 * c0 * r * r
    w = c0 * r
    while r < r_max:
        k1u, k1w = _shoot_rhs(r, u, w, lam, mu, alpha, p)
        k2u, k2w = _shoot_rhs(r + 0.5 * h, u + 0.5 * h * k1u, w + 0.5 * h * k1w, lam, mu, alpha, p)
        k3u, k3w = _shoot_rhs(r + 0.5 * h, u + 0.5 * h * k2u, w + 0.5 * h * k2w, lam, mu, alpha, p)
        k4u, k4w = _shoot_rhs(r + h, u + h * k3u, w + h * k3w, lam, mu, alpha, p)
        u += h * (k1u + 2.0 * k2u + 2.0 * k3u + k4u) / 6.0
        w += h * (k1w + 2.0 * k2w + 2.0 * k3w + k4w) / 6.0
        r += h
        if u <= 0.0:
            return 1, r
        if w >= 0.0 and r > 4.0 * h:
            return 2, r
    return 0, r_max


def shoot_trace(lam, mu, alpha, p, a, h, r_max):
    """Integrate as in shoot_classify, storing the trajectory.

    Returns (r_nodes, u_nodes, w_nodes, stop_index) where stop_index is the
    last index before an event (or the final index).
    """
    nsteps = int(round(r_max / h))
    rr = np.empty(nsteps + 1)
    uu = np.empty(nsteps + 1)
    ww = np.empty(nsteps + 1)
    rr[0], uu[0], ww[0] = 0.0, a, 0.0
    c0 = (lam * a - mu * a**3 - alpha * a ** (p - 1.0)) / 4.0
    r = h
    u = a + 0.5 * c0 * r * r
    w = c0 * r
    rr[1], uu[1], ww[1] = r, u, w
    stop = nsteps
    for k in range(2, nsteps + 1):
        k1u, k1w = _shoot_rhs(r, u, w, lam, mu, alpha, p)
        k2u, k2w = _shoot_rhs(r + 0.5 * h, u + 0.5 * h * k1u, w + 0.5 * h * k1w, lam, mu, alpha, p)
        k3u, k3w = _shoot_rhs(r + 0.5 * h, u + 0.5 * h * k2u, w + 0.5 * h * k2w, lam, mu, alpha, p)
        k4u, k4w = _shoot_rhs(r + h, u + h * k3u, w + h * k3w, lam, mu, alpha, p)
        u += h * (k1u + 2.0 * k2u + 2.0 * k3u + k4u) / 6.0
        w += h * (k1w + 2.0 * k2w + 2.0 * k3w + k4w) / 6.0
        r += h
        rr[k], uu[k], ww[k] = r, u, w
        if u <= 0.0 or (w >= 0.0 and r > 4.0 * h):
            stop = k
            break
    return rr[: stop + 1], uu[: stop + 1], ww[: stop + 1], stop
