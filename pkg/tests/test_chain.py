import math

import numpy as np
import pytest

from heatcell.chain import (ChainParams, MaxwellianSpec, cell_outgoing, compare_to_continuum,
                            solve_cell, solve_chain)
from heatcell.collision import collide_arrays
from heatcell.errors import ContractViolation, MismatchedConfig, ZeroFlux
from heatcell.families import cone_family
from heatcell.grid import GriddedDensity, MomentumGrid, assemble, weighted_integral
from heatcell.transport import evolve


def _sample_grid_density(rng, nodes, h, mass, k):
    """Draw from a piecewise-constant density given by node masses."""
    cdf = np.cumsum(mass)
    idx = np.searchsorted(cdf / cdf[-1], rng.random(k))
    return nodes[idx] + h * (rng.random(k) - 0.5)


def test_outgoing_matches_monte_carlo(params, grid):
    v = cone_family(grid)
    g = solve_cell(v, params)
    left, right = cell_outgoing(g, v, params)
    out = assemble(left, right)
    rng = np.random.default_rng(7)
    k = 1_000_000
    # F = 0.9 exp(-p^2) + 0.5 exp(-2 p^2): a mixture of two centred normals
    w1, w2 = 0.9 * math.sqrt(math.pi), 0.5 * math.sqrt(math.pi / 2)
    pick = rng.random(k) < w1 / (w1 + w2)
    p = np.where(pick, rng.normal(0, math.sqrt(0.5), k), rng.normal(0, 0.5, k))
    ug = g.grid
    P = _sample_grid_density(rng, ug.nodes, ug.h, g.physical(), k)
    p2, _ = collide_arrays(p, P, params.rho)
    # outgoing mass equals incoming mass
    assert weighted_integral(out) == pytest.approx(weighted_integral(v), rel=1e-9)
    for f, k_pow in ((np.cos, None), (None, 1), (None, 2)):
        if f is not None:
            vals = out.with_values(out.values * f(grid.nodes), 0.0, 0.0)
            quad = weighted_integral(vals) / weighted_integral(out)
            mc = np.mean(f(p2))
        else:
            quad = weighted_integral(out, k_pow) / weighted_integral(out)
            mc = np.mean(p2 ** k_pow)
        assert abs(quad - mc) < 5e-3


def test_second_moment_exact(params, grid):
    # E[p'^2] = rho^2 E[p^2] + (1 - rho)^2 E[P^2] for centred inputs
    v = cone_family(grid)
    g = solve_cell(v, params)
    left, right = cell_outgoing(g, v, params)
    out = assemble(left, right)
    r = params.rho
    Ep2 = weighted_integral(v, 2) / weighted_integral(v)
    EP2 = weighted_integral(g, 2) / weighted_integral(g)
    lhs = weighted_integral(out, 2) / weighted_integral(out)
    assert lhs == pytest.approx(r * r * Ep2 + (1 - r) ** 2 * EP2, rel=1e-9)


def test_equilibrium_chain_is_stationary(params, coarse_grid):
    spec = MaxwellianSpec()
    L, R = spec.half(coarse_grid, 1), spec.half(coarse_grid, -1)
    sol = solve_chain(ChainParams(4, 1.0, L, R), params)
    assert sol.sweeps <= 2
    for c in sol.cells:
        ref = spec.scatterer_density(c.g.grid.nodes, params)
        assert np.max(np.abs(c.g.physical() - ref)) < 1e-12
        assert np.max(np.abs(c.F_out_right.F - L.F)) < 1e-12


def test_no_scattering_is_transparent(params, coarse_grid):
    spec = MaxwellianSpec()
    L = spec.half(coarse_grid, 1, perturbation=lambda p: 1.0 + 0.1 * np.exp(-(p - 0.8) ** 2))
    R = MaxwellianSpec(beta=1.5).half(coarse_grid, -1)
    sol = solve_chain(ChainParams(3, 0.0, L, R), params)
    for c in sol.cells:
        np.testing.assert_allclose(c.F_in_left.values, L.values, rtol=1e-14)
        np.testing.assert_allclose(c.F_in_right.values, R.values, rtol=1e-14)


def test_interface_fluxes_conserved(params, coarse_grid):
    spec = MaxwellianSpec()
    L = spec.half(coarse_grid, 1, perturbation=lambda p: 1.0 + 0.1 * np.exp(-(p - 0.8) ** 2 / 0.3))
    R = spec.half(coarse_grid, -1, perturbation=lambda p: 0.95 + 0.0 * p)
    sol = solve_chain(ChainParams(4, 1.0, L, R, sweep_tol=1e-11), params)
    fl = np.array([f.as_array() for f in sol.interface_fluxes])
    assert np.max(np.ptp(fl, axis=0)) < 1e-6
    assert sol.max_change < 1e-11


def test_chain_params_validation(coarse_grid):
    spec = MaxwellianSpec()
    L, R = spec.half(coarse_grid, 1), spec.half(coarse_grid, -1)
    for kw in ({"N": 0, "b": 1.0}, {"N": 2, "b": 3.0}, {"N": 2, "b": -1.0}):
        with pytest.raises(ContractViolation):
            ChainParams(left=L, right=R, **kw)
    with pytest.raises(ContractViolation):
        ChainParams(2, 1.0, R, L)
    with pytest.raises(ContractViolation):
        ChainParams(2, 1.0, L, R, omega=0.0)
    with pytest.raises(ContractViolation):
        MaxwellianSpec(beta=-1.0)


def test_solve_cell_zero_flux(params, coarse_grid):
    with pytest.raises(ZeroFlux):
        solve_cell(GriddedDensity(coarse_grid, np.zeros(coarse_grid.n), 0.0, 0.0, 1.0), params)


def test_compare_rejects_other_grid(params, coarse_grid):
    spec = MaxwellianSpec()
    sol = solve_chain(ChainParams(2, 1.0, spec.half(coarse_grid, 1), spec.half(coarse_grid, -1)),
                      params)
    other = evolve(cone_family(MomentumGrid(n=64)), 1.0, 1e-6, params)
    with pytest.raises(MismatchedConfig):
        compare_to_continuum(sol, other, 1.0)


def test_maxwellian_spec_scatterer_normalised(params):
    spec = MaxwellianSpec(beta=1.7, drift=0.2)
    P = np.linspace(-30, 30, 20001)
    assert np.trapezoid(spec.scatterer_density(P, params), P) == pytest.approx(1.0, rel=1e-10)
