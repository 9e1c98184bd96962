import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from heatcell.errors import ConfigError, ContractViolation, DegenerateDensity
from heatcell.families import cone_family, drifted, jump_family, one_sided
from heatcell.grid import (GriddedDensity, HalfDensity, ModelParams, MomentumGrid, assemble,
                           cone_check, jump_polynomial, norm_G1_F1, sample, sample_smooth,
                           signed_integral, tail_moment, total_variation, weighted_integral)

SQRT_PI = 1.7724538509055159


def test_model_params_ratios():
    p = ModelParams(m=1.0, M=3.0)
    assert p.rho == pytest.approx(0.5, abs=1e-15)
    assert p.mu == pytest.approx(1.0 / 3.0, abs=1e-15)
    q = ModelParams.from_rho(0.2)
    assert q.rho == pytest.approx(0.2, abs=1e-15)
    assert q.M == pytest.approx(1.5, abs=1e-15)


@pytest.mark.parametrize("kw", [{"m": 1.0, "M": 1.0}, {"m": -1.0, "M": 2.0}, {"m": 2.0, "M": 1.0}])
def test_model_params_rejects_bad_masses(kw):
    with pytest.raises(ConfigError):
        ModelParams(**kw)


@pytest.mark.parametrize("n", [121, 30, 0])
def test_grid_rejects_bad_n(n):
    with pytest.raises(ConfigError) as exc:
        MomentumGrid(n=n)
    assert exc.value.details["field"] == "grid.n"


def test_grid_nodes_staggered():
    g = MomentumGrid(p_max=6.0, n=240)
    assert g.h == pytest.approx(0.05)
    assert g.nodes[0] == pytest.approx(-6.0 + 0.025)
    assert g.nodes[-1] == pytest.approx(6.0 - 0.025)
    np.testing.assert_allclose(g.nodes, -g.nodes[::-1], atol=1e-15)
    assert not np.any(g.nodes == 0.0)


def test_extended_grid_reaches_scaled_cutoff():
    g = MomentumGrid()
    e = g.extended(1.0 / 3.0)
    assert e.h == pytest.approx(g.h)
    assert e.n == 416
    assert e.p_max >= 6.0 * math.sqrt(3.0) - 1e-9


def test_gaussian_moments_closed_form(grid):
    one = GriddedDensity.constant(grid, 1.0)
    # the one-sided jump fits see rounding-free smooth data but still carry
    # their O(h^6) fit error, about 1e-11 at the default spacing
    assert weighted_integral(one, 0) == pytest.approx(SQRT_PI, rel=1e-10)
    assert weighted_integral(one, 1) == pytest.approx(0.0, abs=1e-10)
    assert weighted_integral(one, 2) == pytest.approx(SQRT_PI / 2, rel=1e-10)
    assert weighted_integral(one, 4) == pytest.approx(3 * SQRT_PI / 4, rel=1e-10)
    # int |p| exp(-p^2) = 1,  int sign(p) p^2 exp(-p^2) = 0
    assert signed_integral(one, 1) == pytest.approx(1.0, rel=1e-10)
    assert signed_integral(one, 0) == pytest.approx(0.0, abs=1e-10)


def test_scatterer_weight_closed_form(params, grid):
    ug = grid.extended(params.mu)
    u = GriddedDensity.constant(ug, 1.0, nu=params.mu)
    # int exp(-P^2/3) dP = sqrt(3 pi)
    assert weighted_integral(u, 0) == pytest.approx(3.0699801238394655, rel=1e-13)


def test_jump_at_zero_integrates_exactly(grid):
    step = one_sided(grid)
    # int_0^inf exp(-p^2) p^k: k=0 sqrt(pi)/2, k=1 1/2, k=2 sqrt(pi)/4, k=3 1/2
    for k, ref in [(0, SQRT_PI / 2), (1, 0.5), (2, SQRT_PI / 4), (3, 0.5)]:
        assert weighted_integral(step, k) == pytest.approx(ref, rel=1e-10, abs=1e-10)


def test_jump_polynomial_vanishes_on_smooth(grid):
    smooth = cone_family(grid)
    assert np.max(np.abs(jump_polynomial(smooth.values))) < 1e-7
    # jump function 0.1 exp(-p^2/2) = 0.1 - 0.05 h^2 (p/h)^2 + ...
    c = jump_polynomial(jump_family(grid).values)
    assert abs(c[0] - 0.1) < 1e-7
    assert abs(c[1]) < 1e-7
    assert abs(c[2] + 0.05 * grid.h ** 2) < 1e-7


def test_jump_fit_error_order():
    errs = []
    for n in (120, 240, 480):
        g = MomentumGrid(n=n)
        exact = 0.9 * SQRT_PI * (1.0 + 5.0 / 9.0 / math.sqrt(2.0))
        errs.append(abs(weighted_integral(cone_family(g), 0) - exact))
    assert errs[0] / errs[1] > 32.0 and errs[1] / errs[2] > 32.0


def test_mixed_jump_density_integral(grid):
    # v = 0.9 + 0.5 exp(-(p - 0.3)^2) + 0.1 theta(p) exp(-p^2/2)
    d = jump_family(grid)
    ref = (0.9 * SQRT_PI + 0.5 * math.sqrt(math.pi / 2) * math.exp(-0.09 / 2)
           + 0.1 * 0.5 * math.sqrt(math.pi / 1.5))
    assert weighted_integral(d, 0) == pytest.approx(ref, rel=1e-10)


def test_drifted_mass(grid):
    assert weighted_integral(drifted(grid, 0.2), 0) == pytest.approx(SQRT_PI, rel=1e-10)


@given(st.floats(0.0, 10.0), st.sampled_from([0.5, 1.0, 1.0 / 3.0]), st.integers(0, 6))
def test_tail_moment_matches_quadrature(a, nu, k):
    from scipy import integrate
    ref = integrate.quad(lambda p: math.exp(-nu * p * p) * p ** k, a, np.inf,
                         epsabs=1e-300, epsrel=1e-12)[0]
    got = tail_moment(nu, a, k)
    assert got == pytest.approx(ref, rel=1e-9, abs=1e-300)


def test_cone_check_closed_form(grid):
    sigma, eps = 0.9, 5.0 / 9.0
    rep = cone_check(cone_family(grid, sigma, eps))
    Z = 1.0 / (sigma * (1.0 + eps / math.sqrt(2.0)))
    assert rep.Z == pytest.approx(Z, rel=1e-10)
    assert rep.tail_product == pytest.approx(1.0 / (1.0 + eps / math.sqrt(2.0)), rel=1e-10)
    assert rep.in_cone
    assert not cone_check(GriddedDensity.constant(grid, 1.0)).in_cone


def test_cone_check_rejects_degenerate(grid):
    with pytest.raises(DegenerateDensity):
        cone_check(GriddedDensity(grid, np.zeros(grid.n), 0.0, 0.0, 1.0))
    with pytest.raises(ContractViolation):
        cone_check(GriddedDensity.constant(grid.extended(0.5), 1.0, nu=0.5))


def test_norm_and_total_variation(grid):
    d = GriddedDensity(grid, np.where(grid.nodes > 0, 2.0, -1.0), -1.0, 2.0, 1.0)
    assert norm_G1_F1(d) == pytest.approx(1.5 * SQRT_PI, rel=1e-10)
    assert total_variation(d) == pytest.approx(3.0)


def test_sample_tails_and_nodes(grid):
    d = cone_family(grid)
    assert sample(d, grid.nodes[7]) == pytest.approx(d.values[7])
    assert sample(d, 100.0) == d.tail_plus
    x = np.linspace(-5.5, 5.5, 41)
    np.testing.assert_allclose(sample_smooth(d, x), 0.9 + 0.5 * np.exp(-x * x), atol=1e-9)


def test_half_density_round_trip(grid):
    v = jump_family(grid)
    lo, hi = HalfDensity.of(v, -1), HalfDensity.of(v, 1)
    back = assemble(lo, hi)
    np.testing.assert_array_equal(back.values, v.values)
    assert (back.tail_minus, back.tail_plus) == (v.tail_minus, v.tail_plus)
    again = HalfDensity.from_F(grid, 1, hi.F, hi.tail)
    np.testing.assert_allclose(again.values, hi.values, rtol=1e-14)
    m = hi.mirrored()
    assert m.sign == -1
    np.testing.assert_array_equal(m.values, hi.values[::-1])
    with pytest.raises(ContractViolation):
        HalfDensity(grid, 1, np.ones(3), 0.0)


def test_density_state_round_trip(grid):
    v = cone_family(grid)
    w = GriddedDensity.from_state(grid, v.state, 1.0)
    np.testing.assert_array_equal(w.values, v.values)
    assert w.reflect().values[0] == v.values[-1]
