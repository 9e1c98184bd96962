"""Acceptance criteria 1-14. Each test prints one PASS/FAIL line."""
import math
import time

import numpy as np
import pytest

from conftest import record
from heatcell import checks
from heatcell.bvp import BoundaryData, forward_map, relax_oracle, solve_bvp
from heatcell.chain import ChainParams, MaxwellianSpec, compare_to_continuum, solve_cell, solve_chain
from heatcell.collision import verify_bounds
from heatcell.families import cone_family, drifted, maxwellian, random_cone_density
from heatcell.grid import (GriddedDensity, HalfDensity, ModelParams, MomentumGrid, assemble,
                           cone_check, norm_G1_F1)
from heatcell.scatterer import equilibrium_constant, fixed_point, ly_estimate, scatterer_grid
from heatcell.transport import drifted_maxwellian_fluxes, evolve, flux_drift, fluxes, rhs


def test_c01_kernel_identity():
    t0 = time.perf_counter()
    rec = checks.kernel_identity(n_points=10_000, seed=1)
    dt = time.perf_counter() - t0
    ok = rec["passed"] and dt < 1.0
    record(1, ok, f"max residual {rec['value']:.2e} (<= 1e-12), {dt:.3f} s")
    assert ok


def test_c02_collision_invariants(params):
    rec = checks.collision_invariants(params, n=10_000, seed=2)
    record(2, rec["passed"], f"max relative error {rec['value']:.2e}, "
                             f"S^2 - I {rec['involution_error']:.1e}")
    assert rec["passed"]


def test_c03_g1_preservation(params, grid):
    t0 = time.perf_counter()
    rec = checks.g1_preservation(params, grid, n_trials=20, seed=3)
    dt = time.perf_counter() - t0
    ok = rec["passed"] and dt < 5.0
    record(3, ok, f"worst relative defect {rec['value']:.2e} (<= 1e-8), {dt:.2f} s")
    assert ok


def test_c04_equilibrium_fixed_points(params, grid):
    errs = {}
    for a in (0.0, 0.3):
        spec = MaxwellianSpec(beta=2.0, drift=a)
        g = solve_cell(maxwellian(grid, 2.0, a), params)
        errs[a] = float(np.max(np.abs(g.physical() - spec.scatterer_density(g.grid.nodes, params))))
    u1 = fixed_point(GriddedDensity.constant(grid, 1.0), params).u
    const = float(np.max(np.abs(u1.values - math.sqrt(params.mu / math.pi))))
    ok = errs[0.0] <= 1e-8 and errs[0.3] <= 1e-6 and const <= 1e-10
    record(4, ok, f"a=0 {errs[0.0]:.1e}, a=0.3 {errs[0.3]:.1e}, constant {const:.1e}")
    assert ok


def _stationarity(params, n):
    g = MomentumGrid(n=n)
    one = GriddedDensity.constant(g, 1.0)
    vc = drifted(g, 0.2)
    r1 = norm_G1_F1(rhs(one, fixed_point(one, params).u, params))
    r2 = norm_G1_F1(rhs(vc, fixed_point(vc, params).u, params))
    return r1, r2


def test_c05_stationarity(params):
    r1, r2 = _stationarity(params, 240)
    # at the default grid both residuals sit at rounding; the decrease under
    # refinement is measured where the drifted residual still exceeds it
    ratios = []
    for n in (32, 40):
        a = _stationarity(params, n)[1]
        b = _stationarity(params, 2 * n)[1]
        ratios.append(a / b)
    ok = r1 <= 1e-6 and r2 <= 1e-6 and min(ratios) >= 4.0
    record(5, ok, f"equilibrium {r1:.1e}, drifted {r2:.1e}, n-doubling decrease "
                  f"{min(ratios):.0f}x (>= 4)")
    assert ok


def test_c06_flux_closed_forms(params):
    g = MomentumGrid(p_max=8.0, n=320)
    worst = 0.0
    for beta in (1.0, 2.0):
        for a in (0.0, 0.1, 0.5):
            num = fluxes(maxwellian(g, beta, a, m=params.m), params).as_array()
            ref = drifted_maxwellian_fluxes(beta, a, params.m).as_array()
            # components that vanish in closed form are compared absolutely
            err = np.abs(num - ref) / np.where(ref == 0.0, 1.0, np.abs(ref))
            worst = max(worst, float(err.max()))
    ok = worst <= 1e-8
    record(6, ok, f"worst relative error {worst:.1e} over 6 (beta, a) pairs")
    assert ok


def test_c07_flux_conservation(params, grid):
    v0 = cone_family(grid)
    t0 = time.perf_counter()
    prof = evolve(v0, 0.1, 1e-8, params)
    dt = time.perf_counter() - t0
    drift = flux_drift(prof)
    ok = prof.completed and drift <= 1e-6 and dt < 60.0
    record(7, ok, f"flux drift {drift:.1e} (<= 1e-6), {len(prof.stations)} stations, {dt:.1f} s")
    assert ok


def test_c08_champ_lav(params, grid):
    rec = checks.champ_lav(params, grid, n_trials=10, seed=8)
    record(8, rec["passed"], f"worst G1 difference {rec['value']:.1e} (<= 1e-8)")
    assert rec["passed"]


def _manufactured(params, grid):
    v = cone_family(grid)
    plus, minus = HalfDensity.of(v, 1), HalfDensity.of(v, -1)
    p = minus.nodes
    bump = 0.01 * (np.exp(-((p + 0.7) / 0.3) ** 2) - np.exp(-((p + 1.4) / 0.3) ** 2))
    star = HalfDensity.from_F(grid, -1, minus.F + bump, minus.tail)
    data = forward_map(star, plus, 0.1, 1e-10, params)
    return star, plus, BoundaryData(plus, data)


@pytest.fixture(scope="module")
def manufactured(params, grid):
    return _manufactured(params, grid)


def test_c09_bvp_round_trip(params, manufactured):
    star, _, bd = manufactured
    t0 = time.perf_counter()
    res = solve_bvp(bd, 0.1, 1e-10, params)
    dt = time.perf_counter() - t0
    err = float(np.max(np.abs(res.F0_minus.F - star.F)))
    ok = err <= 1e-6 and res.newton_iterations <= 8 and dt < 300.0
    record(9, ok, f"recovery error {err:.1e} (<= 1e-6), {res.newton_iterations} Newton "
                  f"iterations, {dt:.1f} s")
    assert ok


def test_c10_shoot_vs_relax(params, manufactured):
    star, plus, bd = manufactured
    errs = {}
    for cells in (16, 32, 64):
        rp = relax_oracle(bd, 0.1, 1e9, 0.9, params, cells=cells)
        xs = [s.x for s in rp.stations]
        pr = evolve(assemble(star, plus), 0.1, 1e-10, params, x_eval=xs)
        sel = {round(s.x, 12): s for s in pr.stations}
        errs[cells] = max(float(np.max(np.abs(sel[round(r.x, 12)].v.physical() - r.v.physical())))
                          for r in rp.stations)
    ok = errs[64] <= 1e-4 and errs[16] > errs[32] > errs[64]
    record(10, ok, "sup F difference " + ", ".join(f"{c} cells {e:.1e}" for c, e in errs.items()))
    assert ok


@pytest.mark.slow
def test_c11_chain_continuum(params, grid):
    spec = MaxwellianSpec()
    left = spec.half(grid, 1, perturbation=lambda p: 1.0 + 0.1 * np.exp(-(p - 0.8) ** 2 / 0.3))
    right = spec.half(grid, -1, perturbation=lambda p: 0.95 + 0.0 * p)
    Ns = (16, 32, 64)
    xs = sorted({(i - 0.5) / N for N in Ns for i in range(1, N + 1)})
    cont = solve_bvp(BoundaryData(left, right), 1.0, 1e-10, params, x_eval=xs)
    errs = []
    for N in Ns:
        sol = solve_chain(ChainParams(N, 1.0, left, right, sweep_tol=1e-11), params)
        errs.append(compare_to_continuum(sol, cont.profile, 1.0)["sup_error"])
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    ok = all(abs(o - 1.0) <= 0.3 for o in orders)
    record(11, ok, "sup errors " + ", ".join(f"{e:.2e}" for e in errs)
           + "; orders " + ", ".join(f"{o:.2f}" for o in orders))
    assert ok


def _ly_test_set(params, grid, rng, k=30):
    ug = scatterer_grid(grid, params)
    out = []
    for _ in range(k):
        c, w, a = rng.uniform(-3.0, 3.0), rng.uniform(0.2, 2.0), rng.uniform(0.5, 2.0)
        out.append(GriddedDensity(ug, a * np.exp(-((ug.nodes - c) / w) ** 2), 0.0, 0.0, params.mu))
    return out


def test_c12_lasota_yorke(params, grid):
    rng = np.random.default_rng(12)
    tests = _ly_test_set(params, grid, rng)
    zetas = []
    for _ in range(5):
        v = random_cone_density(grid, rng, margin=0.2)
        assert cone_check(v).margin >= 0.2
        zetas.append(ly_estimate(v, tests, params).zeta_hat)
    at_boundary = ly_estimate(GriddedDensity.constant(grid, 1.0), tests, params).zeta_hat
    ok = max(zetas) < 1.0
    record(12, ok, f"zeta_hat max {max(zetas):.3f} (< 1) over 5 cone densities; "
                   f"at v = 1: {at_boundary:.3f}")
    assert ok


def test_c13_tail_vanishing(params):
    edge = {}
    for p_max, n in ((6.0, 240), (8.0, 320)):
        g = MomentumGrid(p_max=p_max, n=n)
        u = fixed_point(cone_family(g), params).u
        edge[p_max] = max(abs(u.values[0]), abs(u.values[-1]))
    ok = edge[6.0] <= 1e-3 and edge[8.0] < edge[6.0]
    record(13, ok, f"|u| at outermost node: p_max 6 {edge[6.0]:.3e} (<= 1e-3), "
                   f"p_max 8 {edge[8.0]:.3e}")
    assert ok


def test_c14_bound_verification():
    reports = verify_bounds(ModelParams.from_rho(0.5), 10.0, n_samples=100_000, seed=14)
    D = [r for r in reports if r.domain_label == "D"][0]
    ok = D.max_ratio <= 1.0 + 1e-9
    record(14, ok, f"max ratio on D {D.max_ratio:.3e} (<= 1 + 1e-9), {D.n_samples} samples")
    assert ok
