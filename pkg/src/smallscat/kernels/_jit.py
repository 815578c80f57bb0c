"""Numba implementations of the O(n^2) pairwise kernels.

Every parallel loop writes a disjoint slice of the output; reductions over
the parallel index are done afterwards in serial, fixed order. The results
are therefore identical for any thread count.
"""
import math

import numpy as np
from numba import njit, prange

INV_FOUR_PI = 1.0 / (4.0 * np.pi)


@njit(cache=True)
def _green(k, r):
    # exp(ikr) / (4 pi r) in real arithmetic
    amp = math.exp(-k.imag * r) * INV_FOUR_PI / r
    ph = k.real * r
    return complex(amp * math.cos(ph), amp * math.sin(ph))


@njit(cache=True)
def _grad_coef(k, r):
    # grad g = coef * (x - y); coef = g (ik - 1/r) / r
    ir = 1.0 / r
    return _green(k, r) * (1j * k - ir) * ir


@njit(cache=True)
def _dyad_coefs(k, r):
    # D = c_iso I + c_rr rhat rhat^T  (= k^2 g I + Hess g)
    g = _green(k, r)
    ir = 1.0 / r
    ikr = 1j * k * ir
    ir2 = ir * ir
    k2 = k * k
    return g * (k2 + ikr - ir2), g * (-k2 - 3.0 * ikr + 3.0 * ir2)


@njit(parallel=True, cache=True)
def coupling_matrix(points, pol, k, self_blocks):
    n = points.shape[0]
    mat = np.zeros((3 * n, 3 * n), dtype=np.complex128)
    for j in prange(n):
        xj = points[j]
        rh = np.empty(3)
        v = np.empty(3, dtype=np.complex128)
        for m in range(n):
            if m == j:
                for a in range(3):
                    for c in range(3):
                        mat[3 * j + a, 3 * j + c] = self_blocks[j, a, c]
                    mat[3 * j + a, 3 * j + a] += 1.0
                continue
            d0 = xj[0] - points[m, 0]
            d1 = xj[1] - points[m, 1]
            d2 = xj[2] - points[m, 2]
            r = math.sqrt(d0 * d0 + d1 * d1 + d2 * d2)
            rh[0] = d0 / r
            rh[1] = d1 / r
            rh[2] = d2 / r
            ci, cr = _dyad_coefs(k, r)
            P = pol[m]
            for c in range(3):
                v[c] = rh[0] * P[0, c] + rh[1] * P[1, c] + rh[2] * P[2, c]
            for a in range(3):
                for c in range(3):
                    mat[3 * j + a, 3 * m + c] = ci * P[a, c] + cr * rh[a] * v[c]
    return mat


@njit(parallel=True, cache=True)
def coupling_apply(points, w, k):
    # y_j = sum_{m != j} D(x_j, x_m) w_m
    n = points.shape[0]
    out = np.zeros((n, 3), dtype=np.complex128)
    for j in prange(n):
        s0 = 0j
        s1 = 0j
        s2 = 0j
        for m in range(n):
            if m == j:
                continue
            d0 = points[j, 0] - points[m, 0]
            d1 = points[j, 1] - points[m, 1]
            d2 = points[j, 2] - points[m, 2]
            r2 = d0 * d0 + d1 * d1 + d2 * d2
            r = math.sqrt(r2)
            ci, cr = _dyad_coefs(k, r)
            proj = (d0 * w[m, 0] + d1 * w[m, 1] + d2 * w[m, 2]) / r2
            s0 += ci * w[m, 0] + cr * d0 * proj
            s1 += ci * w[m, 1] + cr * d1 * proj
            s2 += ci * w[m, 2] + cr * d2 * proj
        out[j, 0] = s0
        out[j, 1] = s1
        out[j, 2] = s2
    return out


@njit(parallel=True, cache=True)
def dipole_sum(targets, sources, moments, k, skip):
    # sum_m grad_x g(x, x_m) x Q_m, omitting source skip[i] for target i
    nt = targets.shape[0]
    ns = sources.shape[0]
    out = np.zeros((nt, 3), dtype=np.complex128)
    for i in prange(nt):
        s0 = 0j
        s1 = 0j
        s2 = 0j
        for m in range(ns):
            if m == skip[i]:
                continue
            d0 = targets[i, 0] - sources[m, 0]
            d1 = targets[i, 1] - sources[m, 1]
            d2 = targets[i, 2] - sources[m, 2]
            r = math.sqrt(d0 * d0 + d1 * d1 + d2 * d2)
            c = _grad_coef(k, r)
            q0 = moments[m, 0]
            q1 = moments[m, 1]
            q2 = moments[m, 2]
            s0 += c * (d1 * q2 - d2 * q1)
            s1 += c * (d2 * q0 - d0 * q2)
            s2 += c * (d0 * q1 - d1 * q0)
        out[i, 0] = s0
        out[i, 1] = s1
        out[i, 2] = s2
    return out


@njit(parallel=True, cache=True)
def bie_matrix(cent, nrm, area, k):
    # (I/2 + T), centroid collocation, self-face blocks of T dropped
    nf = cent.shape[0]
    mat = np.zeros((3 * nf, 3 * nf), dtype=np.complex128)
    for f in prange(nf):
        n0 = nrm[f, 0]
        n1 = nrm[f, 1]
        n2 = nrm[f, 2]
        for a in range(3):
            mat[3 * f + a, 3 * f + a] = 0.5
        for g in range(nf):
            if g == f:
                continue
            d0 = cent[f, 0] - cent[g, 0]
            d1 = cent[f, 1] - cent[g, 1]
            d2 = cent[f, 2] - cent[g, 2]
            r = math.sqrt(d0 * d0 + d1 * d1 + d2 * d2)
            c = _grad_coef(k, r) * area[g]
            gr0 = c * d0
            gr1 = c * d1
            gr2 = c * d2
            ndg = n0 * gr0 + n1 * gr1 + n2 * gr2
            row = 3 * f
            col = 3 * g
            mat[row, col] = gr0 * n0 - ndg
            mat[row, col + 1] = gr0 * n1
            mat[row, col + 2] = gr0 * n2
            mat[row + 1, col] = gr1 * n0
            mat[row + 1, col + 1] = gr1 * n1 - ndg
            mat[row + 1, col + 2] = gr1 * n2
            mat[row + 2, col] = gr2 * n0
            mat[row + 2, col + 1] = gr2 * n1
            mat[row + 2, col + 2] = gr2 * n2 - ndg
    return mat


@njit(parallel=True, cache=True)
def half_identity(cent, nrm, area, k):
    # -sum_{s != t} |S_s| dg(s, t)/dN_s for each centroid t
    nf = cent.shape[0]
    out = np.zeros(nf, dtype=np.complex128)
    for t in prange(nf):
        acc = 0j
        for s in range(nf):
            if s == t:
                continue
            d0 = cent[s, 0] - cent[t, 0]
            d1 = cent[s, 1] - cent[t, 1]
            d2 = cent[s, 2] - cent[t, 2]
            r = math.sqrt(d0 * d0 + d1 * d1 + d2 * d2)
            c = _grad_coef(k, r)
            acc -= area[s] * c * (d0 * nrm[s, 0] + d1 * nrm[s, 1] + d2 * nrm[s, 2])
        out[t] = acc
    return out


@njit(parallel=True, cache=True)
def gamma_rows(cent, nrm, area, k, J):
    # row f of X = sum_g |S_f||S_g| grad_s g(c_f, c_g) (N_f . J_g), g != f
    nf = cent.shape[0]
    rows = np.zeros((nf, 3), dtype=np.complex128)
    for f in prange(nf):
        s0 = 0j
        s1 = 0j
        s2 = 0j
        for g in range(nf):
            if g == f:
                continue
            d0 = cent[f, 0] - cent[g, 0]
            d1 = cent[f, 1] - cent[g, 1]
            d2 = cent[f, 2] - cent[g, 2]
            r = math.sqrt(d0 * d0 + d1 * d1 + d2 * d2)
            nj = nrm[f, 0] * J[g, 0] + nrm[f, 1] * J[g, 1] + nrm[f, 2] * J[g, 2]
            c = _grad_coef(k, r) * area[g] * nj
            s0 += c * d0
            s1 += c * d1
            s2 += c * d2
        rows[f, 0] = area[f] * s0
        rows[f, 1] = area[f] * s1
        rows[f, 2] = area[f] * s2
    return rows


@njit(parallel=True, cache=True)
def max_pair_distance(pts):
    n = pts.shape[0]
    best = np.zeros(n)
    for i in prange(n):
        b = 0.0
        for j in range(i + 1, n):
            d0 = pts[i, 0] - pts[j, 0]
            d1 = pts[i, 1] - pts[j, 1]
            d2 = pts[i, 2] - pts[j, 2]
            d = d0 * d0 + d1 * d1 + d2 * d2
            if d > b:
                b = d
        best[i] = b
    return np.sqrt(best.max()) if n > 1 else 0.0
