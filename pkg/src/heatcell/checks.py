"""Self-checks run by ``heatcell verify``: each returns a record with a pass flag."""
from __future__ import annotations

import math
import warnings

import numpy as np

from .collision import (collide_arrays, collision_matrix, kernel_identity_residual,
                        verify_bounds)
from .errors import ConeViolationWarning
from .families import cone_family, drifted, random_cone_density
from .grid import GriddedDensity, ModelParams, MomentumGrid, norm_G1_F1, weighted_integral
from .scatterer import apply_Kv, equilibrium_constant, fixed_point, scatterer_grid
from .transport import rhs


def _record(name, value, threshold, **extra) -> dict:
    return {"check": name, "value": float(value), "threshold": float(threshold),
            "passed": bool(value <= threshold), **extra}


def kernel_identity(n_points: int = 10_000, seed: int = 0, rhos=(0.2, 0.5, 0.8),
                    box: float = 20.0) -> dict:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for rho in rhos:
        p, q = rng.uniform(-box, box, size=(2, n_points))
        worst = max(worst, float(np.max(kernel_identity_residual(p, q,
                                                                  ModelParams.from_rho(rho)))))
    return _record("kernel_identity", worst, 1e-12, n_points=n_points, rhos=list(rhos))


def collision_invariants(params: ModelParams, n: int = 10_000, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    p, P = rng.normal(size=(2, n)) * np.array([[1.0], [math.sqrt(params.M / params.m)]])
    p2, P2 = collide_arrays(p, P, params.rho)
    mom = np.abs((p2 + P2) - (p + P)) / (np.abs(p) + np.abs(P))
    e0 = p * p / (2 * params.m) + P * P / (2 * params.M)
    e1 = p2 * p2 / (2 * params.m) + P2 * P2 / (2 * params.M)
    en = np.abs(e1 - e0) / e0
    S = collision_matrix(params.rho)
    inv = float(np.max(np.abs(S @ S - np.eye(2))))
    worst = max(float(mom.max()), float(en.max()))
    rec = _record("collision_invariants", worst, 1e-12, involution_error=inv, n=n)
    rec["passed"] = rec["passed"] and inv <= 4 * np.finfo(float).eps
    return rec


def g1_preservation(params: ModelParams, grid: MomentumGrid, n_trials: int = 20,
                    seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    v = cone_family(grid)
    ug = scatterer_grid(grid, params)
    worst = 0.0
    for _ in range(n_trials):
        a = rng.normal(size=3)
        c = rng.normal(size=3) * 2.0
        w = rng.uniform(0.3, 2.0, 3)
        t = rng.uniform(-0.5, 0.5, 2)
        vals = sum(a[i] * np.exp(-((ug.nodes - c[i]) / w[i]) ** 2) for i in range(3))
        # smooth step between the two limits: scatterer densities do not jump
        step = t[0] + (t[1] - t[0]) * 0.5 * (1.0 + np.tanh(ug.nodes))
        u = GriddedDensity(ug, vals + step, t[0], t[1], params.mu)
        ku = apply_Kv(v, u, params)
        worst = max(worst, abs(weighted_integral(ku) - weighted_integral(u)) / norm_G1_F1(u))
    return _record("g1_preservation", worst, 1e-8, trials=n_trials)


def stationarity(params: ModelParams, grid: MomentumGrid, c: float = 0.2) -> list[dict]:
    out = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConeViolationWarning)
        one = GriddedDensity.constant(grid, 1.0)
        u1 = fixed_point(one, params).u
        out.append(_record("stationarity_equilibrium", norm_G1_F1(rhs(one, u1, params)), 1e-6))
        err = float(np.max(np.abs(u1.values - equilibrium_constant(params))))
        out.append(_record("equilibrium_fixed_point", err, 1e-10))
        vc = drifted(grid, c)
        uc = fixed_point(vc, params).u
        out.append(_record("stationarity_drifted", norm_G1_F1(rhs(vc, uc, params)), 1e-6, c=c))
    return out


def champ_lav(params: ModelParams, grid: MomentumGrid, n_trials: int = 10,
              seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_trials):
        v = random_cone_density(grid, rng)
        u = fixed_point(v, params).u
        a = rhs(v, u, params, form="lav")
        b = rhs(v, u, params, form="champ")
        d = a.with_values(a.values - b.values, a.tail_minus - b.tail_minus,
                          a.tail_plus - b.tail_plus)
        worst = max(worst, norm_G1_F1(d))
    return _record("champ_lav_equivalence", worst, 1e-8, trials=n_trials)


def kernel_bounds(L2: float = 10.0, n_samples: int = 100_000, seed: int = 0,
                  rho: float = 0.5) -> list[dict]:
    reports = verify_bounds(ModelParams.from_rho(rho), L2, n_samples=n_samples, seed=seed)
    out = []
    for r in reports:
        rec = {"check": f"kernel_bound_{r.domain_label}", **r.to_dict()}
        rec["threshold"] = 1.0 + 1e-9
        rec["passed"] = bool(r.max_ratio <= 1.0 + 1e-9)
        out.append(rec)
    return out


def run_all(params: ModelParams, grid: MomentumGrid, seed: int = 0, n_samples: int = 100_000,
            L2: float = 10.0, n_points: int = 10_000) -> list[dict]:
    recs = [kernel_identity(n_points, seed), collision_invariants(params, seed=seed),
            g1_preservation(params, grid, seed=seed)]
    recs += stationarity(params, grid)
    recs.append(champ_lav(params, grid, seed=seed))
    recs += kernel_bounds(L2, n_samples, seed)
    return recs
