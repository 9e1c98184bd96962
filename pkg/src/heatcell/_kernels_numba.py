"""Numba-compiled quadrature kernels.

All kernels work on the shared lattice convention: node ``k`` of an ``n``-node
grid with spacing ``h`` sits at ``(k - n/2 + 1/2) h``. Lattice indices outside
``[0, n)`` carry the tail constant of the density. Off-node values of smooth
densities come from 8-point Lagrange interpolation over a ghost-padded array
(four ghost nodes per side hold the tail constants).
"""
import numpy as np
from numba import njit

from ._lagrange import LAM

_LAM = LAM  # frozen into the compiled code as a constant array


@njit(inline="always")
def _stencil(x, n, inv_h, split, w):
    """Lagrange weights for evaluating at ``x``.

    Returns the padded start index of the 8-node stencil, or -1 / -2 when
    ``x`` lies beyond the first / last node (tail constant applies). With
    ``split`` the stencil never straddles p = 0.
    """
    jf = x * inv_h + (0.5 * n - 0.5)
    if jf < 0.0:
        return -1
    if jf > n - 1.0:
        return -2
    b = int(jf)
    s = b - 3
    if split:
        half = n // 2
        if jf >= half - 0.5:
            if s < half:
                s = half
        elif s > half - 8:
            s = half - 8
    t = jf - s
    d0 = t
    d1 = t - 1.0
    d2 = t - 2.0
    d3 = t - 3.0
    d4 = t - 4.0
    d5 = t - 5.0
    d6 = t - 6.0
    d7 = t - 7.0
    l1 = d0
    l2 = l1 * d1
    l3 = l2 * d2
    l4 = l3 * d3
    l5 = l4 * d4
    l6 = l5 * d5
    l7 = l6 * d6
    r6 = d7
    r5 = r6 * d6
    r4 = r5 * d5
    r3 = r4 * d4
    r2 = r3 * d3
    r1 = r2 * d2
    r0 = r1 * d1
    w[0] = _LAM[0] * r0
    w[1] = _LAM[1] * l1 * r1
    w[2] = _LAM[2] * l2 * r2
    w[3] = _LAM[3] * l3 * r3
    w[4] = _LAM[4] * l4 * r4
    w[5] = _LAM[5] * l5 * r5
    w[6] = _LAM[6] * l6 * r6
    w[7] = _LAM[7] * l7
    return s + 4


@njit(inline="always")
def _pad(vals, lo, hi):
    n = vals.shape[0]
    out = np.empty(n + 8)
    out[:4] = lo
    out[4:n + 4] = vals
    out[n + 4:] = hi
    return out


@njit(inline="always")
def _eval(vp, n, lo, hi, inv_h, split, x, w):
    j = _stencil(x, n, inv_h, split, w)
    if j == -1:
        return lo
    if j == -2:
        return hi
    acc = 0.0
    for c in range(8):
        acc += w[c] * vp[j + c]
    return acc


@njit(cache=True, nogil=True)
def sample_many(vals, lo, hi, h, xs, split):
    n = vals.shape[0]
    vp = _pad(vals, lo, hi)
    w = np.empty(8)
    out = np.empty(xs.shape[0])
    inv_h = 1.0 / h
    for i in range(xs.shape[0]):
        out[i] = _eval(vp, n, lo, hi, inv_h, split, xs[i], w)
    return out


@njit(inline="always")
def _scatter(A, i, n_u, j, f, w):
    if j == -1:
        A[i, n_u] += f
    elif j == -2:
        A[i, n_u + 1] += f
    else:
        for c in range(8):
            col = j + c - 4
            if col < 0:
                A[i, n_u] += f * w[c]
            elif col >= n_u:
                A[i, n_u + 1] += f * w[c]
            else:
                A[i, col] += f * w[c]


@njit(cache=True, nogil=True)
def lattice_matrix(v, vlo, vhi, corr, dpoly, out_p, n_u, h, refine, centre, scale,
                   pref, q_p, q_s, width):
    """Matrix of a Gaussian-weighted integral over the particle variable s.

    Row i holds the weights (acting on ``[u, u(-inf), u(+inf)]``) of

        pref * int v(s) exp(-((s - centre p_i)/scale)^2) u(q_p p_i + q_s s) ds

    summed on the sub-lattice ``s_j = (j + 1/2) h / refine``. Zero is a cell
    edge of that lattice; v is interpolated one-sidedly and its jump at zero
    enters through endpoint terms of the jump polynomial ``dpoly``. The
    sub-lattice keeps the stride of the u-samples at most h, which keeps the
    discrete operator from splitting into decoupled residue classes.
    """
    nv = v.shape[0]
    no = out_p.shape[0]
    A = np.zeros((no, n_u + 2))
    vp = _pad(v, vlo, vhi)
    w = np.empty(8)
    inv_h = 1.0 / h
    hs = h / refine
    half_w = width * scale
    nk = corr.shape[0]
    nd = dpoly.shape[0]
    # v on the sub-lattice, jump terms included; rows share these samples
    j0 = int(np.ceil((min(centre * out_p[0], centre * out_p[no - 1]) - half_w) / hs - 0.5))
    j1 = int(np.floor((max(centre * out_p[0], centre * out_p[no - 1]) + half_w) / hs - 0.5))
    vsub = np.empty(j1 - j0 + 1)
    for j in range(j0, j1 + 1):
        s = (j + 0.5) * hs
        vs = _eval(vp, nv, vlo, vhi, inv_h, True, s, w)
        if 0 <= j < nk:
            t = s * inv_h
            dj = 0.0
            tp = 1.0
            for c in range(nd):
                dj += dpoly[c] * tp
                tp *= t
            vs += corr[j] * dj
        vsub[j - j0] = pref * hs * vs
    dd = hs / scale
    rr = np.exp(-2.0 * dd * dd)
    dq = q_s * hs
    off = 0.5 * n_u - 0.5
    for i in range(no):
        p = out_p[i]
        s0 = centre * p
        jlo = int(np.ceil((s0 - half_w) / hs - 0.5))
        jhi = int(np.floor((s0 + half_w) / hs - 0.5))
        s = (jlo + 0.5) * hs
        d = (s - s0) / scale
        g = np.exp(-d * d)
        r = np.exp(-(2.0 * d * dd + dd * dd))
        q = q_p * p + q_s * s
        for j in range(jlo, jhi + 1):
            f = vsub[j - j0] * g
            if f != 0.0:
                jf = q * inv_h + off
                jr = np.floor(jf + 0.5)
                if abs(jf - jr) < 1e-9:
                    # sample on a node: the interpolation weights are a unit vector
                    col = int(jr)
                    if col < 0:
                        A[i, n_u] += f
                    elif col >= n_u:
                        A[i, n_u + 1] += f
                    else:
                        A[i, col] += f
                else:
                    k = _stencil(q, n_u, inv_h, False, w)
                    _scatter(A, i, n_u, k, f, w)
            g *= r
            r *= rr
            q += dq
    return A


@njit(cache=True, nogil=True)
def gain_champ(v, vlo, vhi, u, ulo, uhi, corr, dpoly, out_p, h, rho, mu, width):
    """Gain term integrated over the scatterer momentum P.

    The P-lattice is centred so that the particle argument crosses zero on a
    cell edge; v is interpolated one-sidedly (split) and u two-sidedly. The
    jump of v at zero is accounted for by endpoint terms of its jump
    polynomial ``dpoly`` (coefficients in p/h), as in ``effective_values``.
    """
    nv = v.shape[0]
    nu_ = u.shape[0]
    vp = _pad(v, vlo, vhi)
    up = _pad(u, ulo, uhi)
    w = np.empty(8)
    inv_h = 1.0 / h
    wp = width / np.sqrt(mu)
    nk = corr.shape[0]
    nd = dpoly.shape[0]
    out = np.empty(out_p.shape[0])
    for i in range(out_p.shape[0]):
        p = out_p[i]
        pstar = rho * p / (1.0 - rho)
        acc = 0.0
        for side in (1.0, -1.0):
            m = 1
            while True:
                P = pstar + side * (m - 0.5) * h
                if side * P > wp and m > nk:
                    break
                x = -rho * p + (1.0 - rho) * P
                vx = _eval(vp, nv, vlo, vhi, inv_h, True, x, w)
                ux = _eval(up, nu_, ulo, uhi, inv_h, False, (1.0 + rho) * p + rho * P, w)
                smooth = np.exp(-mu * P * P) * ux
                acc += h * smooth * vx
                if side > 0.0 and m <= nk:
                    t = (1.0 - rho) * (m - 0.5)
                    dj = 0.0
                    tp = 1.0
                    for j in range(nd):
                        dj += dpoly[j] * tp
                        tp *= t
                    acc += h * corr[m - 1] * dj * smooth
                m += 1
        out[i] = acc
    return out
