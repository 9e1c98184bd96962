"""Elastic collision map, the weighted Gaussian kernel and its bounds.

In the weighted variables the collision map is the linear involution
``(p, P) -> (-rho p + (1-rho) P, (1+rho) p + rho P)`` with determinant -1,
and the transfer kernel reduces to ``K(p, q) = exp(-(rho p - q)^2/(1+rho)^2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import ContractViolation, DomainEmpty
from .grid import ModelParams


@dataclass(frozen=True)
class CollisionPair:
    p: float
    P: float


def collide(c: CollisionPair, params: ModelParams) -> CollisionPair:
    rho = params.rho
    return CollisionPair(-rho * c.p + (1.0 - rho) * c.P, (1.0 + rho) * c.p + rho * c.P)


def collide_arrays(p, P, rho: float):
    """Vectorised collision map on momentum arrays."""
    p = np.asarray(p, dtype=float)
    P = np.asarray(P, dtype=float)
    return -rho * p + (1.0 - rho) * P, (1.0 + rho) * p + rho * P


def collision_matrix(rho: float) -> np.ndarray:
    return np.array([[-rho, 1.0 - rho], [1.0 + rho, rho]])


def kernel(p, q, params: ModelParams):
    rho = params.rho
    return np.exp(-((rho * np.asarray(p) - np.asarray(q)) / (1.0 + rho)) ** 2)


def kernel_exponent_split(p, q, params: ModelParams):
    """The exponent written before simplification: mu p^2 - mu q^2 - ((p - rho q)/(1+rho))^2."""
    rho, mu = params.rho, params.mu
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return mu * p * p - mu * q * q - ((p - rho * q) / (1.0 + rho)) ** 2


def kernel_identity_residual(p, q, params: ModelParams):
    """|split exponent - simplified exponent|; zero up to rounding."""
    rho = params.rho
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return np.abs(kernel_exponent_split(p, q, params) + (rho * p - q) ** 2 / (1.0 + rho) ** 2)


@dataclass
class KernelBoundReport:
    domain_label: str
    max_ratio: float
    n_samples: int
    worst_point: tuple
    constants: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"domain_label": self.domain_label, "max_ratio": self.max_ratio,
                "n_samples": self.n_samples, "worst_point": list(self.worst_point),
                "constants": self.constants}


def _log_kernel(p, q, rho):
    return -((rho * p - q) / (1.0 + rho)) ** 2


def newton_radius_threshold(rho: float) -> float:
    """Smallest L2 for which |rho p - q| > rho L2 holds on the whole domain D."""
    return (1.0 + rho - rho * rho) / (2.0 * rho)


def _report(label, logratio, p, q, constants):
    i = int(np.argmax(logratio))
    return KernelBoundReport(label, float(np.exp(logratio[i])), int(p.size),
                             (float(p[i]), float(q[i])), constants)


def _lattice_and_random(rng, n, sampler):
    """Half the budget on a deterministic lattice in the unit square, half uniform."""
    side = max(int(math.isqrt(max(n // 2, 1))), 1)
    a = (np.arange(side) + 0.5) / side
    ua, ub = (x.ravel() for x in np.meshgrid(a, a, indexing="ij"))
    nr = max(n - ua.size, 0)
    ua = np.concatenate([ua, rng.random(nr)])
    ub = np.concatenate([ub, rng.random(nr)])
    return sampler(ua, ub)


def _domain_D(L1, L2, rho, span):
    def sampler(a, b):
        # |q| in (L1 - 1/2, L1 - 1/2 + span), p - rho q in (-(L2+1/2), L2+1/2)
        sgn = np.where(b < 0.5, -1.0, 1.0)
        bb = np.where(b < 0.5, 2.0 * b, 2.0 * b - 1.0)
        q = sgn * (L1 - 0.5 + span * a)
        t = (2.0 * bb - 1.0) * (L2 + 0.5)
        return rho * q + t, q
    return sampler


def _fit_strip_constant(logf, x0s, bounds):
    """Maximise a log-bound ratio from the best starting points (local polish)."""
    best = -np.inf
    for x0 in x0s:
        res = minimize(lambda z: -logf(z[0], z[1]), x0, method="L-BFGS-B", bounds=bounds)
        best = max(best, -float(res.fun), float(logf(*x0)))
    return best


def verify_bounds(params: ModelParams, L_or_L2: float, n_samples: int = 100_000,
                  seed: int = 0) -> list[KernelBoundReport]:
    """Sample each kernel bound domain and report the largest K / bound ratio.

    * ``D``: |p - rho q| < L2 + 1/2, |q| > L1 - 1/2 with L1 = 3 rho L2/(1-rho^2);
      bound exp(-C1 (rho p - q)^2 - C2 L2^2), C1 = 1/(4(1+rho)^2),
      C2 = rho^2/(4(1+rho)^2).
    * ``D'``: |q| > L1, |p - rho q| > L2; the bound is K itself.
    * ``strip-q``: |q| < L, bound C exp(-D p^2) with D = rho^2/(2(1+rho)^2).
    * ``strip-pq``: |p - rho q| < L, bound C exp(-D q^2) with D = (1-rho)^2/2.

    Strip constants C are fitted on one sample set and then checked on a
    fresh one drawn from a different seed.
    """
    L = float(L_or_L2)
    if not L >= 1.0:
        raise ContractViolation("L_or_L2 must be >= 1", value=L)
    if n_samples < 1:
        raise DomainEmpty("no samples requested", n_samples=n_samples)
    rho = params.rho
    s = 1.0 + rho
    rng = np.random.default_rng(seed)
    reports = []

    # domain D with the explicit constants
    L2 = L
    L1 = 3.0 * rho * L2 / (1.0 - rho * rho)
    if L1 - 0.5 <= 0.0:
        raise DomainEmpty("domain D has empty |q| range", L1=L1)
    C1 = 1.0 / (4.0 * s * s)
    C2 = rho * rho / (4.0 * s * s)
    p, q = _lattice_and_random(rng, n_samples, _domain_D(L1, L2, rho, span=2.0 * (L1 + L2)))
    logratio = _log_kernel(p, q, rho) + C1 * (rho * p - q) ** 2 + C2 * L2 * L2
    reports.append(_report("D", logratio, p, q,
                           {"L1": L1, "L2": L2, "C1": C1, "C2": C2,
                            "threshold_L2": newton_radius_threshold(rho),
                            "threshold_met": bool(L2 > newton_radius_threshold(rho))}))

    # domain D': the bound is the exact exponent, so the ratio is exp(0)
    def sampler_dp(a, b):
        sgn = np.where(b < 0.5, -1.0, 1.0)
        bb = np.where(b < 0.5, 2.0 * b, 2.0 * b - 1.0)
        q = sgn * (L1 + 2.0 * (L1 + L2) * a)
        t = np.where(bb < 0.5, -1.0, 1.0) * (L2 + 2.0 * (L1 + L2) * np.abs(2.0 * bb - 1.0))
        return rho * q + t, q
    p, q = _lattice_and_random(rng, n_samples, sampler_dp)
    E = _log_kernel(p, q, rho)
    reports.append(_report("D'", E - E, p, q, {"L1": L1, "L2": L2}))

    # strip |q| < L: fit C for D = rho^2 / (2 (1+rho)^2)
    Dq = rho * rho / (2.0 * s * s)
    pr = 4.0 * L / rho + 10.0

    def samp_q(a, b):
        return (2.0 * a - 1.0) * pr, (2.0 * b - 1.0) * L

    def logf_q(pp, qq):
        return _log_kernel(pp, qq, rho) + Dq * pp * pp

    p, q = _lattice_and_random(rng, n_samples, samp_q)
    lf = logf_q(p, q)
    top = np.argsort(lf)[-5:]
    logC = _fit_strip_constant(logf_q, [(p[i], q[i]) for i in top], [(-pr, pr), (-L, L)])
    p2, q2 = _lattice_and_random(np.random.default_rng(seed + 1), n_samples, samp_q)
    reports.append(_report("strip-q", logf_q(p2, q2) - logC, p2, q2,
                           {"L": L, "D": Dq, "C_fitted": math.exp(logC),
                            "C_analytic": math.exp(L * L / (s * s))}))

    # strip |p - rho q| < L: fit C for D = (1-rho)^2 / 2
    Dpq = (1.0 - rho) ** 2 / 2.0
    qr = 4.0 * L / (1.0 - rho) + 10.0

    def samp_pq(a, b):
        qq = (2.0 * a - 1.0) * qr
        return rho * qq + (2.0 * b - 1.0) * L, qq

    def logf_pq(qq, tt):
        pp = rho * qq + tt
        return _log_kernel(pp, qq, rho) + Dpq * qq * qq

    p, q = _lattice_and_random(rng, n_samples, samp_pq)
    t = p - rho * q
    lf = logf_pq(q, t)
    top = np.argsort(lf)[-5:]
    logC = _fit_strip_constant(logf_pq, [(q[i], t[i]) for i in top], [(-qr, qr), (-L, L)])
    p2, q2 = _lattice_and_random(np.random.default_rng(seed + 2), n_samples, samp_pq)
    reports.append(_report("strip-pq", logf_pq(q2, p2 - rho * q2) - logC, p2, q2,
                           {"L": L, "D": Dpq, "C_fitted": math.exp(logC),
                            "C_analytic": math.exp(rho * rho * L * L / (s * s))}))
    return reports
