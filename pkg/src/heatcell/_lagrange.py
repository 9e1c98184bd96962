"""Constants for 8-point Lagrange interpolation and half-line endpoint weights."""
from math import factorial

import numpy as np
from scipy.special import bernoulli

# barycentric-style constants 1/prod_{d != c}(c - d) on nodes 0..7
LAM = np.array([1.0 / np.prod([c - d for d in range(8) if d != c]) for c in range(8)])


def endpoint_corrections(k: int = 12) -> np.ndarray:
    """Weights c_m, m = 1..k, correcting the midpoint rule on a half-line.

    ``h * sum_{m>=1} (1 + c_m [m <= k]) f((m - 1/2) h)`` approximates
    ``int_0^inf f``. The corrections cancel the Euler-Maclaurin endpoint terms
    (odd derivatives at 0, estimated from a degree k-1 polynomial through the
    first k nodes).
    """
    x = np.arange(1, k + 1) - 0.5
    vinv = np.linalg.inv(np.vander(x, k, increasing=True))
    terms = (k + 1) // 2
    b = bernoulli(2 * terms)
    c = np.zeros(k)
    for j in range(1, terms + 1):
        order = 2 * j - 1
        if order >= k:
            break
        b_half = -(1.0 - 2.0 ** (1 - 2 * j)) * b[2 * j]
        c += b_half / factorial(2 * j) * factorial(order) * vinv[order]
    return c


CORR = endpoint_corrections(12)


def _jump_operators(fit_nodes: int = 8, degree: int = 5):
    """Matrices giving the Taylor coefficients (in t = p/h) of the jump at p = 0.

    A one-sided polynomial through ``fit_nodes`` nodes on each side of zero is
    expanded at 0; the difference of the coefficients (up to ``degree``) is the
    jump function D(t) = v_right(t) - v_left_extended(t).
    """
    t = np.arange(1, fit_nodes + 1) - 0.5
    right = np.linalg.inv(np.vander(t, fit_nodes, increasing=True))[:degree + 1]
    tl = -t[::-1]
    left = np.linalg.inv(np.vander(tl, fit_nodes, increasing=True))[:degree + 1]
    return right, left


JUMP_RIGHT, JUMP_LEFT = _jump_operators()
JUMP_FIT = JUMP_RIGHT.shape[1]
# evaluation of D at the first len(CORR) positive nodes
JUMP_EVAL = np.vander(np.arange(1, len(CORR) + 1) - 0.5, JUMP_RIGHT.shape[0], increasing=True)
