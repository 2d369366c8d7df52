# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels: conservative stencils, weighted reductions, shooting.

Mirrors _ref.py exactly; parity is enforced in tests/test_kernels.py.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport copysign, fabs, pow

HAVE_COMPILED = True

ctypedef cnp.float64_t f64


def radial_apply(double[::1] u, double lam, double eps2,
                 double[::1] mid, double[::1] cell, double h, out=None):
    cdef Py_ssize_t n = u.shape[0] - 1
    if out is None:
        out = np.empty(n + 1, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t j
    cdef double fl, fr
    fr = mid[0] * (u[1] - u[0])
    o[0] = lam * u[0] - eps2 * fr / (cell[0] * h)
    for j in range(1, n):
        fl = fr
        fr = mid[j] * (u[j + 1] - u[j])
        o[j] = lam * u[j] - eps2 * (fr - fl) / (cell[j] * h)
    o[n] = 0.0
    return out


def radial_dirichlet(double[::1] u, double[::1] v, double[::1] mid, double h):
    cdef Py_ssize_t n = mid.shape[0]
    cdef Py_ssize_t j
    cdef double acc = 0.0
    for j in range(n):
        acc += mid[j] * ((u[j + 1] - u[j]) * (v[j + 1] - v[j]))
    return acc / h


def axi_apply(double[:, ::1] u, double lam, double eps2, double hx, double hr,
              double[::1] prho, double[::1] mrho, cnp.uint8_t[:, ::1] interior,
              out=None):
    cdef Py_ssize_t nx = u.shape[0] - 1
    cdef Py_ssize_t nr = u.shape[1] - 1
    if out is None:
        out = np.zeros((nx + 1, nr + 1), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t a, b
    cdef double d2x, drh, fl, fr
    for a in range(nx + 1):
        for b in range(nr + 1):
            if not interior[a, b]:
                o[a, b] = 0.0
                continue
            if a == 0 or a == nx:
                d2x = 0.0
            else:
                d2x = (u[a + 1, b] - 2.0 * u[a, b] + u[a - 1, b]) / (hx * hx)
            if b == 0:
                drh = mrho[0] * (u[a, 1] - u[a, 0]) / (prho[0] * hr)
            elif b == nr:
                drh = 0.0
            else:
                fl = mrho[b - 1] * (u[a, b] - u[a, b - 1])
                fr = mrho[b] * (u[a, b + 1] - u[a, b])
                drh = (fr - fl) / (prho[b] * hr)
            o[a, b] = lam * u[a, b] - eps2 * (d2x + drh)
    return out


def axi_dirichlet(double[:, ::1] u, double[:, ::1] v, double hx, double hr,
                  double[::1] prho, double[::1] mrho, double[::1] lxi):
    cdef Py_ssize_t nx = u.shape[0] - 1
    cdef Py_ssize_t nr = u.shape[1] - 1
    cdef Py_ssize_t a, b
    cdef double acc_x = 0.0, acc_r = 0.0, row
    for a in range(nx):
        for b in range(nr + 1):
            acc_x += prho[b] * ((u[a + 1, b] - u[a, b]) * (v[a + 1, b] - v[a, b]))
    for a in range(nx + 1):
        row = 0.0
        for b in range(nr):
            row += mrho[b] * ((u[a, b + 1] - u[a, b]) * (v[a, b + 1] - v[a, b]))
        acc_r += lxi[a] * row
    return acc_x / hx + acc_r / hr


def wsum_pow(w, u, double q):
    cdef double[::1] wv = np.ascontiguousarray(w, dtype=np.float64).ravel()
    cdef double[::1] uv = np.ascontiguousarray(u, dtype=np.float64).ravel()
    cdef Py_ssize_t j, n = wv.shape[0]
    cdef double acc = 0.0, x
    if q == 2.0:
        for j in range(n):
            x = uv[j]
            acc += wv[j] * x * x
    elif q == 4.0:
        for j in range(n):
            x = uv[j] * uv[j]
            acc += wv[j] * x * x
    else:
        for j in range(n):
            acc += wv[j] * pow(fabs(uv[j]), q)
    return acc


def wdot(w, u, v):
    cdef double[::1] wv = np.ascontiguousarray(w, dtype=np.float64).ravel()
    cdef double[::1] uv = np.ascontiguousarray(u, dtype=np.float64).ravel()
    cdef double[::1] vv = np.ascontiguousarray(v, dtype=np.float64).ravel()
    cdef Py_ssize_t j, n = wv.shape[0]
    cdef double acc = 0.0
    for j in range(n):
        acc += wv[j] * (uv[j] * vv[j])
    return acc


def wdot4(w, a, b, c, d):
    cdef double[::1] wv = np.ascontiguousarray(w, dtype=np.float64).ravel()
    cdef double[::1] av = np.ascontiguousarray(a, dtype=np.float64).ravel()
    cdef double[::1] bv = np.ascontiguousarray(b, dtype=np.float64).ravel()
    cdef double[::1] cv = np.ascontiguousarray(c, dtype=np.float64).ravel()
    cdef double[::1] dv = np.ascontiguousarray(d, dtype=np.float64).ravel()
    cdef Py_ssize_t j, n = wv.shape[0]
    cdef double acc = 0.0
    for j in range(n):
        acc += wv[j] * av[j] * bv[j] * cv[j] * dv[j]
    return acc


cdef inline double _nl(double u, double lam, double mu, double alpha, double p) nogil:
    return lam * u - mu * u * u * u - alpha * copysign(pow(fabs(u), p - 1.0), u)


def shoot_classify(double lam, double mu, double alpha, double p,
                   double a, double h, double r_max):
    cdef double r = h
    cdef double c0 = (lam * a - mu * a * a * a - alpha * pow(a, p - 1.0)) / 4.0
    cdef double u = a + 0.5 * c0 * r * r
    cdef double w = c0 * r
    cdef double k1u, k1w, k2u, k2w, k3u, k3w, k4u, k4w, uh, wh
    while r < r_max:
        k1u = w
        k1w = _nl(u, lam, mu, alpha, p) - 3.0 * w / r
        uh = u + 0.5 * h * k1u; wh = w + 0.5 * h * k1w
        k2u = wh
        k2w = _nl(uh, lam, mu, alpha, p) - 3.0 * wh / (r + 0.5 * h)
        uh = u + 0.5 * h * k2u; wh = w + 0.5 * h * k2w
        k3u = wh
        k3w = _nl(uh, lam, mu, alpha, p) - 3.0 * wh / (r + 0.5 * h)
        uh = u + h * k3u; wh = w + h * k3w
        k4u = wh
        k4w = _nl(uh, lam, mu, alpha, p) - 3.0 * wh / (r + h)
        u += h * (k1u + 2.0 * k2u + 2.0 * k3u + k4u) / 6.0
        w += h * (k1w + 2.0 * k2w + 2.0 * k3w + k4w) / 6.0
        r += h
        if u <= 0.0:
            return 1, r
        if w >= 0.0 and r > 4.0 * h:
            return 2, r
    return 0, r_max


def shoot_trace(double lam, double mu, double alpha, double p,
                double a, double h, double r_max):
    cdef Py_ssize_t nsteps = <Py_ssize_t> (r_max / h + 0.5)
    rr_np = np.empty(nsteps + 1, dtype=np.float64)
    uu_np = np.empty(nsteps + 1, dtype=np.float64)
    ww_np = np.empty(nsteps + 1, dtype=np.float64)
    cdef double[::1] rr = rr_np
    cdef double[::1] uu = uu_np
    cdef double[::1] ww = ww_np
    cdef double c0 = (lam * a - mu * a * a * a - alpha * pow(a, p - 1.0)) / 4.0
    cdef double r = h
    cdef double u = a + 0.5 * c0 * r * r
    cdef double w = c0 * r
    cdef double k1u, k1w, k2u, k2w, k3u, k3w, k4u, k4w, uh, wh
    cdef Py_ssize_t k, stop = nsteps
    rr[0] = 0.0; uu[0] = a; ww[0] = 0.0
    rr[1] = r; uu[1] = u; ww[1] = w
    for k in range(2, nsteps + 1):
        k1u = w
        k1w = _nl(u, lam, mu, alpha, p) - 3.0 * w / r
        uh = u + 0.5 * h * k1u; wh = w + 0.5 * h * k1w
        k2u = wh
        k2w = _nl(uh, lam, mu, alpha, p) - 3.0 * wh / (r + 0.5 * h)
        uh = u + 0.5 * h * k2u; wh = w + 0.5 * h * k2w
        k3u = wh
        k3w = _nl(uh, lam, mu, alpha, p) - 3.0 * wh / (r + 0.5 * h)
        uh = u + h * k3u; wh = w + h * k3w
        k4u = wh
        k4w = _nl(uh, lam, mu, alpha, p) - 3.0 * wh / (r + h)
        u += h * (k1u + 2.0 * k2u + 2.0 * k3u + k4u) / 6.0
        w += h * (k1w + 2.0 * k2w + 2.0 * k3w + k4w) / 6.0
        r += h
        rr[k] = r; uu[k] = u; ww[k] = w
        if u <= 0.0 or (w >= 0.0 and r > 4.0 * h):
            stop = k
            break
    return rr_np[: stop + 1], uu_np[: stop + 1], ww_np[: stop + 1], stop
