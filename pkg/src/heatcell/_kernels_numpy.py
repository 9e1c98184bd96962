"""Pure-numpy versions of the quadrature kernels (same signatures as numba)."""
import numpy as np

from ._lagrange import LAM

_NODES = np.arange(8.0)


def _stencil(x, n, inv_h, split):
    """Vectorised stencil: (padded start, weights[..., 8], below, above)."""
    jf = np.asarray(x, dtype=float) * inv_h + (0.5 * n - 0.5)
    below = jf < 0.0
    above = jf > n - 1.0
    b = np.floor(np.clip(jf, 0.0, n - 1.0)).astype(np.int64)
    s = b - 3
    if split:
        half = n // 2
        s = np.where(jf >= half - 0.5, np.maximum(s, half), np.minimum(s, half - 8))
    d = (jf - s)[..., None] - _NODES
    w = np.empty(d.shape)
    for c in range(8):
        others = np.delete(d, c, axis=-1)
        w[..., c] = LAM[c] * np.prod(others, axis=-1)
    return s + 4, w, below, above


def _pad(vals, lo, hi):
    return np.concatenate([np.full(4, lo), vals, np.full(4, hi)])


def _eval(vals, lo, hi, inv_h, split, x):
    n = vals.shape[0]
    vp = _pad(vals, lo, hi)
    j, w, below, above = _stencil(x, n, inv_h, split)
    idx = np.clip(j[..., None] + np.arange(8), 0, n + 7)
    out = np.sum(w * vp[idx], axis=-1)
    out = np.where(below, lo, out)
    return np.where(above, hi, out)


def sample_many(vals, lo, hi, h, xs, split):
    return _eval(np.asarray(vals, float), lo, hi, 1.0 / h, split, np.asarray(xs, float))


def lattice_matrix(v, vlo, vhi, corr, dpoly, out_p, n_u, h, refine, centre, scale,
                   pref, q_p, q_s, width):
    no = out_p.shape[0]
    hs = h / refine
    half_w = width * scale
    nk = corr.shape[0]
    s0 = centre * out_p
    jlo = np.ceil((s0 - half_w) / hs - 0.5).astype(np.int64)
    jhi = np.floor((s0 + half_w) / hs - 0.5).astype(np.int64)
    span = int((jhi - jlo).max()) + 1
    j = jlo[:, None] + np.arange(span)
    valid = j <= jhi[:, None]
    s = (j + 0.5) * hs
    vs = _eval(v, vlo, vhi, 1.0 / h, True, s)
    near = (j >= 0) & (j < nk)
    jc = np.clip(j, 0, nk - 1)
    dj = np.polynomial.polynomial.polyval(s / h, dpoly)
    vs = vs + np.where(near, corr[jc] * dj, 0.0)
    g = np.exp(-((s - s0[:, None]) / scale) ** 2)
    f = np.where(valid, pref * hs * vs * g, 0.0)
    q = q_p * out_p[:, None] + q_s * s
    k, w, below, above = _stencil(q, n_u, 1.0 / h, False)
    cols = k[..., None] + np.arange(8) - 4
    cols = np.where(cols < 0, n_u, np.where(cols >= n_u, n_u + 1, cols))
    cols = np.where(below[..., None], n_u, cols)
    cols = np.where(above[..., None], n_u + 1, cols)
    out_side = below[..., None] | above[..., None]
    w = np.where(out_side, 0.0, w)
    w[..., 0] = np.where(below | above, 1.0, w[..., 0])
    rows = np.broadcast_to(np.arange(no)[:, None, None], cols.shape)
    flat = (rows * (n_u + 2) + cols).ravel()
    A = np.bincount(flat, weights=(f[..., None] * w).ravel(), minlength=no * (n_u + 2))
    return A.reshape(no, n_u + 2)


def gain_champ(v, vlo, vhi, u, ulo, uhi, corr, dpoly, out_p, h, rho, mu, width):
    wp = width / np.sqrt(mu)
    nk = corr.shape[0]
    pstar = rho * out_p / (1.0 - rho)
    nmax = int(np.ceil((np.abs(pstar).max() + wp) / h)) + nk + 2
    m = np.arange(1, nmax + 1)
    total = np.zeros(out_p.shape[0])
    t = (1.0 - rho) * (np.arange(1, nk + 1) - 0.5)
    dj = np.polynomial.polynomial.polyval(t, dpoly)
    for side in (1.0, -1.0):
        P = pstar[:, None] + side * (m - 0.5) * h
        keep = (side * P <= wp) | (m <= nk)
        x = -rho * out_p[:, None] + (1.0 - rho) * P
        vx = _eval(v, vlo, vhi, 1.0 / h, True, x)
        ux = _eval(u, ulo, uhi, 1.0 / h, False, (1.0 + rho) * out_p[:, None] + rho * P)
        smooth = np.exp(-mu * P * P) * ux
        term = h * smooth * vx
        if side > 0:
            term[:, :nk] += h * corr * dj * smooth[:, :nk]
        total += np.where(keep, term, 0.0).sum(axis=1)
    return total
