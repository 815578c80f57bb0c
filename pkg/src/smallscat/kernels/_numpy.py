"""Pure-numpy versions of the pairwise kernels (row-chunked broadcasting)."""
import numpy as np

INV_FOUR_PI = 1.0 / (4.0 * np.pi)
_CHUNK_ELEMS = 2_000_000


def _chunks(n_rows, n_cols):
    step = max(1, _CHUNK_ELEMS // max(n_cols, 1))
    for start in range(0, n_rows, step):
        yield slice(start, min(start + step, n_rows))


def _pair_geometry(targets, sources, rows):
    d = targets[rows, None, :] - sources[None, :, :]
    r = np.sqrt(np.einsum("ijk,ijk->ij", d, d))
    return d, r


def _mask_self(r, rows, skip):
    # replace self pairs by r = 1 so coefficients stay finite; zeroed later
    own = skip[rows]
    hit = own >= 0
    r = r.copy()
    r[np.nonzero(hit)[0], own[hit]] = 1.0
    return r, hit, own


def _green(k, r):
    return np.exp(1j * k * r) * INV_FOUR_PI / r


def coupling_matrix(points, pol, k, self_blocks):
    n = points.shape[0]
    mat = np.zeros((n, 3, n, 3), dtype=np.complex128)
    idx = np.arange(n)
    for rows in _chunks(n, 9 * n):
        d, r = _pair_geometry(points, points, rows)
        r, hit, own = _mask_self(r, rows, idx)
        rh = d / r[..., None]
        g = _green(k, r)
        ikr = 1j * k / r
        ci = g * (k * k + ikr - 1.0 / r**2)
        cr = g * (-k * k - 3.0 * ikr + 3.0 / r**2)
        v = np.einsum("ijb,jbc->ijc", rh, pol)
        blk = ci[..., None, None] * pol[None] + cr[..., None, None] * rh[..., :, None] * v[..., None, :]
        local = np.arange(rows.stop - rows.start)
        blk[local, own] = self_blocks[own] + np.eye(3)
        mat[rows] = blk.transpose(0, 2, 1, 3)
    return mat.reshape(3 * n, 3 * n)


def coupling_apply(points, w, k):
    n = points.shape[0]
    out = np.zeros((n, 3), dtype=np.complex128)
    idx = np.arange(n)
    for rows in _chunks(n, 3 * n):
        d, r = _pair_geometry(points, points, rows)
        r, hit, own = _mask_self(r, rows, idx)
        g = _green(k, r)
        ikr = 1j * k / r
        ci = g * (k * k + ikr - 1.0 / r**2)
        cr = g * (-k * k - 3.0 * ikr + 3.0 / r**2)
        local = np.arange(rows.stop - rows.start)
        ci[local, own] = 0.0
        cr[local, own] = 0.0
        proj = np.einsum("ijk,jk->ij", d, w) / r**2
        out[rows] = ci @ w + np.einsum("ij,ijk->ik", cr * proj, d)
    return out


def dipole_sum(targets, sources, moments, k, skip):
    nt = targets.shape[0]
    out = np.zeros((nt, 3), dtype=np.complex128)
    for rows in _chunks(nt, 3 * sources.shape[0]):
        d, r = _pair_geometry(targets, sources, rows)
        r, hit, own = _mask_self(r, rows, skip)
        c = _green(k, r) * (1j * k - 1.0 / r) / r
        if hit.any():
            c[np.nonzero(hit)[0], own[hit]] = 0.0
        cross = np.cross(d, moments[None, :, :])
        out[rows] = np.einsum("ij,ijk->ik", c, cross)
    return out


def bie_matrix(cent, nrm, area, k):
    nf = cent.shape[0]
    mat = np.zeros((nf, 3, nf, 3), dtype=np.complex128)
    idx = np.arange(nf)
    for rows in _chunks(nf, 9 * nf):
        d, r = _pair_geometry(cent, cent, rows)
        r, hit, own = _mask_self(r, rows, idx)
        c = _green(k, r) * (1j * k - 1.0 / r) / r * area[None, :]
        local = np.arange(rows.stop - rows.start)
        c[local, own] = 0.0
        gr = c[..., None] * d
        nf_rows = nrm[rows]
        ndg = np.einsum("ik,ijk->ij", nf_rows, gr)
        blk = gr[..., :, None] * nf_rows[:, None, None, :] - ndg[..., None, None] * np.eye(3)
        blk[local, own] = 0.5 * np.eye(3)
        mat[rows] = blk.transpose(0, 2, 1, 3)
    return mat.reshape(3 * nf, 3 * nf)


def half_identity(cent, nrm, area, k):
    nf = cent.shape[0]
    out = np.zeros(nf, dtype=np.complex128)
    idx = np.arange(nf)
    for rows in _chunks(nf, 3 * nf):
        # rows index t, columns index s; d = c_s - c_t
        d = cent[None, :, :] - cent[rows, None, :]
        r = np.sqrt(np.einsum("ijk,ijk->ij", d, d))
        r, hit, own = _mask_self(r, rows, idx)
        c = _green(k, r) * (1j * k - 1.0 / r) / r
        local = np.arange(rows.stop - rows.start)
        c[local, own] = 0.0
        out[rows] = -np.einsum("ij,j,ijk,jk->i", c, area, d, nrm)
    return out


def gamma_rows(cent, nrm, area, k, J):
    nf = cent.shape[0]
    rows_out = np.zeros((nf, 3), dtype=np.complex128)
    idx = np.arange(nf)
    for rows in _chunks(nf, 3 * nf):
        d, r = _pair_geometry(cent, cent, rows)
        r, hit, own = _mask_self(r, rows, idx)
        c = _green(k, r) * (1j * k - 1.0 / r) / r
        local = np.arange(rows.stop - rows.start)
        c[local, own] = 0.0
        nj = nrm[rows] @ J.T
        rows_out[rows] = area[rows, None] * np.einsum("ij,ijk->ik", c * area[None, :] * nj, d)
    return rows_out


def max_pair_distance(pts):
    n = pts.shape[0]
    if n < 2:
        return 0.0
    best = 0.0
    for rows in _chunks(n, 3 * n):
        d, r = _pair_geometry(pts, pts, rows)
        best = max(best, float(r.max()))
    return best
