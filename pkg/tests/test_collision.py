import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from heatcell.collision import (CollisionPair, collide, collide_arrays, collision_matrix, kernel,
                                kernel_identity_residual, newton_radius_threshold, verify_bounds)
from heatcell.grid import ModelParams

rhos = st.floats(0.05, 0.95)
moms = st.floats(-50.0, 50.0)


@given(rhos, moms, moms)
def test_momentum_and_energy_conserved(rho, p, P):
    prm = ModelParams.from_rho(rho)
    out = collide(CollisionPair(p, P), prm)
    scale = abs(p) + abs(P) + 1e-300
    assert abs((out.p + out.P) - (p + P)) <= 1e-12 * scale
    e0 = p * p / (2 * prm.m) + P * P / (2 * prm.M)
    e1 = out.p ** 2 / (2 * prm.m) + out.P ** 2 / (2 * prm.M)
    assert abs(e1 - e0) <= 1e-12 * max(e0, 1e-300)


@given(rhos, moms, moms)
def test_collision_is_involution(rho, p, P):
    prm = ModelParams.from_rho(rho)
    back = collide(collide(CollisionPair(p, P), prm), prm)
    assert back.p == pytest.approx(p, abs=1e-12 * (abs(p) + abs(P) + 1))
    assert back.P == pytest.approx(P, abs=1e-12 * (abs(p) + abs(P) + 1))


@given(rhos)
def test_collision_matrix(rho):
    S = collision_matrix(rho)
    assert np.linalg.det(S) == pytest.approx(-1.0, abs=1e-14)
    np.testing.assert_allclose(S @ S, np.eye(2), atol=4 * np.finfo(float).eps)


def test_elastic_formula_physical_units():
    # m = 1, M = 3: v' = ((m - M) v + 2 M V)/(m + M)
    prm = ModelParams(1.0, 3.0)
    p, P = 1.3, -0.4
    v, V = p / 1.0, P / 3.0
    vp = ((1 - 3) * v + 2 * 3 * V) / 4
    Vp = ((3 - 1) * V + 2 * 1 * v) / 4
    p2, P2 = collide_arrays(p, P, prm.rho)
    assert p2 == pytest.approx(vp, rel=1e-14)
    assert P2 == pytest.approx(3 * Vp, rel=1e-14)


@given(rhos, moms, moms)
def test_kernel_range_and_peak(rho, p, q):
    prm = ModelParams.from_rho(rho)
    k = float(kernel(p, q, prm))
    assert 0.0 <= k <= 1.0
    assert float(kernel(p, rho * p, prm)) == 1.0


def test_kernel_identity_residual_rounding(params):
    rng = np.random.default_rng(5)
    p, q = rng.uniform(-20, 20, (2, 1000))
    assert np.max(kernel_identity_residual(p, q, params)) < 1e-12


def test_newton_radius_threshold_value():
    # (1 + rho - rho^2)/(2 rho) at rho = 0.5
    assert newton_radius_threshold(0.5) == pytest.approx(1.25)


@pytest.mark.parametrize("rho", [0.2, 0.5, 0.8])
def test_verify_bounds_all_domains(rho):
    reports = verify_bounds(ModelParams.from_rho(rho), 10.0, n_samples=20_000, seed=3)
    labels = {r.domain_label for r in reports}
    assert "D" in labels
    for r in reports:
        assert r.max_ratio <= 1.0 + 1e-9, r.to_dict()
        assert r.n_samples > 0
        assert math.isfinite(r.max_ratio)
