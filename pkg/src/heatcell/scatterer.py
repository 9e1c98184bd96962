"""The weighted transfer operator K_v, its normalised fixed point and diagnostics.

``(K_v u)(p) = Q int v((p - rho q)/(1+rho)) K(p, q) u(q) dq`` with
``Q = 1/((1+rho) int exp(-q^2) v)``. The quadrature runs over the particle
variable ``s = (p - rho q)/(1+rho)`` on a refinement of the v-lattice, so a
jump of ``v`` at zero sits on a cell edge.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls

from . import kernels
from .errors import ConeViolationWarning, ContractViolation, DegenerateDensity, NotConverged
from .grid import (GriddedDensity, ModelParams, MomentumGrid, cone_check, jump_polynomial,
                   norm_G1_F1, total_variation, weighted_integral)

# Gaussian factors are cut where their exponent drops below -WIDTH^2 (~2e-16)
WIDTH = 6.0


def scatterer_grid(grid: MomentumGrid, params: ModelParams) -> MomentumGrid:
    return grid.extended(params.mu)


def _mass(v: GriddedDensity) -> float:
    m = weighted_integral(v, 0)
    if not m > 0.0:
        raise DegenerateDensity("int exp(-p^2) v dp is not positive", integral=m)
    return m


def transfer_matrix(v: GriddedDensity, params: ModelParams, u_grid: MomentumGrid) -> np.ndarray:
    """Dense matrix M with ``K_v u = M @ [u, u(-inf), u(+inf)]`` (tails excluded)."""
    if v.nu != 1.0:
        raise ContractViolation("v must be a particle density (nu = 1)", nu=v.nu)
    if not math.isclose(u_grid.h, v.grid.h, rel_tol=1e-12):
        raise ContractViolation("u and v grids must share the spacing h")
    mass = _mass(v)
    A = kernels.kv_matrix(np.ascontiguousarray(v.values), v.tail_minus, v.tail_plus,
                          jump_polynomial(v.values), np.ascontiguousarray(u_grid.nodes),
                          u_grid.n, v.grid.h, params.rho, WIDTH)
    A /= (1.0 + params.rho) * mass
    return A


def tail_factors(v: GriddedDensity) -> tuple[float, float]:
    """Z v(-inf), Z v(+inf): how K_v maps the tails of u."""
    Z = math.sqrt(math.pi) / _mass(v)
    return Z * v.tail_minus, Z * v.tail_plus


def apply_Kv(v: GriddedDensity, u: GriddedDensity, params: ModelParams,
             grid: MomentumGrid | None = None) -> GriddedDensity:
    """One application of K_v; output on the grid of ``u``."""
    if u.nu != params.mu:
        raise ContractViolation("u must be a scatterer density (nu = mu)", nu=u.nu)
    A = transfer_matrix(v, params, u.grid)
    zl, zh = tail_factors(v)
    out = A @ u.state
    return GriddedDensity(u.grid, out, zl * u.tail_minus, zh * u.tail_plus, u.nu)


@dataclass
class FixedPointResult:
    u: GriddedDensity
    iterations: int
    final_residual: float
    convergence_rate: float
    sigma_essential: float
    in_cone: bool = True

    def diagnostics(self) -> dict:
        return {"iterations": self.iterations, "final_residual": self.final_residual,
                "convergence_rate": self.convergence_rate,
                "sigma_essential": self.sigma_essential, "in_cone": self.in_cone}


def equilibrium_constant(params: ModelParams) -> float:
    """sqrt(mu/pi): the normalised fixed point for v = const."""
    return math.sqrt(params.mu / math.pi)


def _normalise(state, u_grid, nu):
    return state / weighted_integral(GriddedDensity.from_state(u_grid, np.abs(state), nu), 0)


def fixed_point(v: GriddedDensity, params: ModelParams, tol: float = 1e-13,
                max_iter: int = 5000, u0: GriddedDensity | None = None,
                grid: MomentumGrid | None = None) -> FixedPointResult:
    """Normalised eigenvector of K_v for eigenvalue 1, by power iteration.

    The tails decouple: u(+-inf) is multiplied by Z v(+-inf) at each step, so
    the fixed point has tail 0 on every side where that factor differs from 1.
    Those tails are pinned to 0; a side with factor exactly 1 keeps iterating.
    """
    u_grid = scatterer_grid(v.grid, params) if u0 is None else u0.grid
    report = cone_check(v)
    if not report.in_cone:
        warnings.warn(f"v is outside the cone (tail product {report.tail_product:.6g})",
                      ConeViolationWarning, stacklevel=2)
    A = transfer_matrix(v, params, u_grid)
    zl, zh = tail_factors(v)
    free = (abs(zl - 1.0) < 1e-12, abs(zh - 1.0) < 1e-12)
    nu = params.mu
    if u0 is None:
        state = np.full(u_grid.n + 2, equilibrium_constant(params))
    else:
        state = np.array(u0.state, dtype=float)
    for side, ok in zip((-2, -1), free):
        if not ok:
            state[side] = 0.0
    state = _normalise(state, u_grid, nu)
    w = u_grid.quad_weights * np.exp(-nu * u_grid.nodes ** 2)
    res_hist = []
    for it in range(1, max_iter + 1):
        new = np.empty_like(state)
        new[:-2] = A @ state
        new[-2] = zl * state[-2] if free[0] else 0.0
        new[-1] = zh * state[-1] if free[1] else 0.0
        new = _normalise(new, u_grid, nu)
        diff = new - state
        res = float(np.sum(w * np.abs(diff[:-2])))
        state = new
        res_hist.append(res)
        if res <= tol:
            break
    else:
        raise NotConverged("power iteration did not converge", iterations=max_iter,
                           last_residual=res_hist[-1] if res_hist else None)
    tail = res_hist[-6:]
    rate = 0.0
    if len(tail) >= 2 and tail[0] > 0:
        ratios = [b / a for a, b in zip(tail[:-1], tail[1:]) if a > 0 and b > 0]
        rate = float(np.exp(np.mean(np.log(ratios)))) if ratios else 0.0
    u = GriddedDensity.from_state(u_grid, state, nu)
    return FixedPointResult(u=u, iterations=it, final_residual=res_hist[-1],
                            convergence_rate=rate, sigma_essential=sigma_essential(v),
                            in_cone=report.in_cone)


def fixed_point_residual(v: GriddedDensity, u: GriddedDensity, params: ModelParams) -> float:
    """G1 distance between u and K_v u."""
    ku = apply_Kv(v, u, params)
    return norm_G1_F1(ku.with_values(ku.values - u.values, ku.tail_minus - u.tail_minus,
                                     ku.tail_plus - u.tail_plus))


def sigma_essential(v: GriddedDensity) -> float:
    mass = _mass(v)
    return math.sqrt(math.pi) * max(v.tail_minus, v.tail_plus) / mass


@dataclass
class LYEstimate:
    zeta_hat: float
    R_hat: float
    sample_count: int
    inequality_holds: bool = True
    max_violation: float = 0.0

    def to_dict(self) -> dict:
        return {"zeta_hat": self.zeta_hat, "R_hat": self.R_hat,
                "sample_count": self.sample_count, "inequality_holds": self.inequality_holds,
                "max_violation": self.max_violation}


def ly_estimate(v: GriddedDensity, test_set: list[GriddedDensity], params: ModelParams,
                inflation: float = 0.05) -> LYEstimate:
    """Fit TV(K_v u) ~ zeta TV(u) + R ||u|| by non-negative least squares.

    The inequality is then checked with both fitted constants inflated by
    ``inflation``.
    """
    if not test_set:
        raise ContractViolation("ly_estimate needs a non-empty test set")
    rows, rhs = [], []
    A = None
    zl, zh = tail_factors(v)
    for u in test_set:
        tv = total_variation(u)
        if not tv > 0.0:
            raise ContractViolation("test densities must have positive total variation")
        if A is None or u.grid != grid_seen:
            A = transfer_matrix(v, params, u.grid)
            grid_seen = u.grid
        ku = GriddedDensity(u.grid, A @ u.state, zl * u.tail_minus, zh * u.tail_plus, u.nu)
        rows.append((tv, norm_G1_F1(u)))
        rhs.append(total_variation(ku))
    M = np.array(rows)
    b = np.array(rhs)
    coef, _ = nnls(M, b)
    zeta, R = (float(c) for c in coef)
    bound = M @ (coef * (1.0 + inflation))
    viol = float(np.max(b - bound))
    return LYEstimate(zeta_hat=zeta, R_hat=R, sample_count=len(test_set),
                      inequality_holds=bool(viol <= 0.0), max_violation=max(viol, 0.0))
