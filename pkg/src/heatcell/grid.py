"""Momentum discretisation, weighted densities, norms and the cone test.

Densities are stored in weighted form: a particle density ``F = exp(-p^2) v``
is held as ``v`` (weight exponent ``nu = 1``), a scatterer density
``g = exp(-mu P^2) u`` as ``u`` (``nu = mu``). Node values are complemented by
the two limits at -inf and +inf, which are used beyond the grid edge.

Every density is assumed smooth on each half-line; a jump at p = 0 is allowed
(the spatial equation forces one through ``sign(p)``). Integrals use the
midpoint rule, corrected for that jump by Euler-Maclaurin endpoint terms of the
jump function, plus closed-form tail integrals beyond the grid edge.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import erfc

from . import kernels
from ._lagrange import CORR, JUMP_EVAL, JUMP_FIT, JUMP_LEFT, JUMP_RIGHT
from .errors import ConfigError, ContractViolation, DegenerateDensity

MIN_NODES = 32
CONE_TOL = 1e-12  # tail products within this of 1 count as the cone boundary


@dataclass(frozen=True)
class ModelParams:
    """Masses and the derived collision ratios.

    ``rho = (M - m)/(M + m)`` and ``mu = m/M = (1 - rho)/(1 + rho)``.
    """

    m: float = 1.0
    M: float = 3.0
    rho: float = field(init=False)
    mu: float = field(init=False)

    def __post_init__(self):
        if not (self.m > 0 and self.M > 0):
            raise ConfigError("masses must be positive", m=self.m, M=self.M)
        if not self.M > self.m:
            raise ConfigError("scatterer must be heavier than the particle (0 < rho < 1)",
                              m=self.m, M=self.M)
        rho = (self.M - self.m) / (self.M + self.m)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "mu", (1.0 - rho) / (1.0 + rho))

    @classmethod
    def from_rho(cls, rho: float, m: float = 1.0) -> "ModelParams":
        if not 0.0 < rho < 1.0:
            raise ConfigError("rho must lie in (0, 1)", rho=rho)
        return cls(m=m, M=m * (1.0 + rho) / (1.0 - rho))

    @property
    def beta_ref(self) -> float:
        """Inverse temperature of the reference weight exp(-p^2)."""
        return 2.0 * self.m

    def to_dict(self) -> dict:
        return {"m": self.m, "M": self.M, "rho": self.rho, "mu": self.mu}


@dataclass(frozen=True)
class MomentumGrid:
    """Symmetric staggered grid: nodes ``+-(k - 1/2) h``, ``h = 2 p_max / n``."""

    p_max: float = 6.0
    n: int = 240

    def __post_init__(self):
        if not (isinstance(self.n, (int, np.integer)) and self.n % 2 == 0):
            raise ConfigError("grid.n must be an even integer", field="grid.n", value=self.n)
        if self.n < MIN_NODES:
            raise ConfigError(f"grid.n must be at least {MIN_NODES}", field="grid.n", value=self.n)
        if not self.p_max > 0:
            raise ConfigError("grid.p_max must be positive", field="grid.p_max", value=self.p_max)

    @property
    def h(self) -> float:
        return 2.0 * self.p_max / self.n

    @cached_property
    def nodes(self) -> np.ndarray:
        k = np.arange(self.n)
        out = (k - 0.5 * self.n + 0.5) * self.h
        out.flags.writeable = False
        return out

    @cached_property
    def quad_weights(self) -> np.ndarray:
        """Plain midpoint weights; jumps at p = 0 are handled by ``effective_values``."""
        w = np.full(self.n, self.h)
        w.flags.writeable = False
        return w

    def extended(self, nu: float) -> "MomentumGrid":
        """Grid with the same spacing reaching at least ``p_max/sqrt(nu)``.

        Used for scatterer densities so their weight exp(-nu p^2) is as small
        at the edge as exp(-p^2) is on this grid.
        """
        if nu >= 1.0:
            return self
        half = int(math.ceil(self.p_max / (math.sqrt(nu) * self.h) - 1e-9))
        return MomentumGrid(p_max=half * self.h, n=2 * half)

    def to_dict(self) -> dict:
        return {"p_max": self.p_max, "n": int(self.n), "h": self.h}


def jump_polynomial(values: np.ndarray) -> np.ndarray:
    """Taylor coefficients (in p/h) of the jump function of ``values`` at p = 0.

    Zero up to rounding when the node values come from a function that is
    smooth across zero.
    """
    half = values.shape[0] // 2
    right = values[half:half + JUMP_FIT]
    left = values[half - JUMP_FIT:half]
    return JUMP_RIGHT @ right - JUMP_LEFT @ left


def effective_values(values: np.ndarray) -> np.ndarray:
    """Node values whose plain midpoint sum integrates a jump at p = 0 correctly.

    The midpoint rule is spectrally accurate for functions smooth across zero.
    For a density smooth on each half-line, its error is the half-line
    endpoint error of the jump function D; adding ``c_m D(s_m)`` at the first
    positive nodes cancels it. Other integrand factors must be smooth.
    """
    out = np.array(values, dtype=float)
    half = out.shape[0] // 2
    d = JUMP_EVAL @ jump_polynomial(out)
    out[half:half + d.shape[0]] += CORR * d
    return out


@dataclass(frozen=True, eq=False)
class GriddedDensity:
    """Node values plus limits at -inf / +inf, in weighted form with exponent nu."""

    grid: MomentumGrid
    values: np.ndarray
    tail_minus: float
    tail_plus: float
    nu: float

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.grid.n,):
            raise ContractViolation("values do not match the grid", expected=self.grid.n,
                                    got=list(vals.shape))
        if not (np.all(np.isfinite(vals)) and math.isfinite(self.tail_minus)
                and math.isfinite(self.tail_plus)):
            raise ContractViolation("density values must be finite")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "tail_minus", float(self.tail_minus))
        object.__setattr__(self, "tail_plus", float(self.tail_plus))
        object.__setattr__(self, "nu", float(self.nu))

    @classmethod
    def from_function(cls, grid, func, nu=1.0, tails=None) -> "GriddedDensity":
        """Sample ``func`` at the nodes; tails default to func(+-inf) clipped to finite."""
        vals = np.asarray(func(grid.nodes), dtype=float)
        if tails is None:
            with np.errstate(all="ignore"):
                lo, hi = (float(np.asarray(func(np.array([x])))[0]) for x in (-np.inf, np.inf))
            tails = (lo, hi)
        return cls(grid, vals, tails[0], tails[1], nu)

    @classmethod
    def constant(cls, grid, c, nu=1.0) -> "GriddedDensity":
        return cls(grid, np.full(grid.n, float(c)), c, c, nu)

    def with_values(self, values, tail_minus=None, tail_plus=None) -> "GriddedDensity":
        return GriddedDensity(self.grid, values,
                              self.tail_minus if tail_minus is None else tail_minus,
                              self.tail_plus if tail_plus is None else tail_plus, self.nu)

    def scaled(self, c: float) -> "GriddedDensity":
        return GriddedDensity(self.grid, c * self.values, c * self.tail_minus,
                              c * self.tail_plus, self.nu)

    def reflect(self) -> "GriddedDensity":
        """p -> -p: values reversed, tails swapped."""
        return GriddedDensity(self.grid, self.values[::-1], self.tail_plus, self.tail_minus,
                              self.nu)

    def abs(self) -> "GriddedDensity":
        return GriddedDensity(self.grid, np.abs(self.values), abs(self.tail_minus),
                              abs(self.tail_plus), self.nu)

    def physical(self) -> np.ndarray:
        """Physical node values ``exp(-nu p^2) d(p)`` (F or g)."""
        return np.exp(-self.nu * self.grid.nodes ** 2) * self.values

    @property
    def state(self) -> np.ndarray:
        """Node values followed by tail_minus, tail_plus."""
        return np.concatenate([self.values, [self.tail_minus, self.tail_plus]])

    @classmethod
    def from_state(cls, grid, state, nu) -> "GriddedDensity":
        return cls(grid, state[:-2], state[-2], state[-1], nu)


@dataclass(frozen=True)
class ConeReport:
    Z: float
    tail_product: float
    margin: float
    in_cone: bool

    def to_dict(self) -> dict:
        return {"Z": self.Z, "tail_product": self.tail_product, "margin": self.margin,
                "in_cone": bool(self.in_cone)}


def tail_moment(nu: float, a: float, k: int) -> float:
    """``int_a^inf exp(-nu p^2) p^k dp`` by the incomplete-gamma recurrence."""
    sq = math.sqrt(nu)
    t0 = math.sqrt(math.pi) / (2.0 * sq) * erfc(sq * a)
    t1 = math.exp(-nu * a * a) / (2.0 * nu)
    if k == 0:
        return t0
    if k == 1:
        return t1
    prev2, prev1 = t0, t1
    for j in range(2, k + 1):
        cur = a ** (j - 1) * math.exp(-nu * a * a) / (2.0 * nu) + (j - 1) / (2.0 * nu) * prev2
        prev2, prev1 = prev1, cur
    return prev1


def _quadrature_values(d: GriddedDensity) -> np.ndarray:
    """Particle densities (nu = 1) may jump at p = 0 and get the jump terms.

    Scatterer densities are images of a Gaussian integral operator and are
    smooth across zero; the one-sided fits would only add their own
    extrapolation error (large for features narrower than a few nodes).
    """
    return effective_values(d.values) if d.nu == 1.0 else d.values


def weighted_integral(d: GriddedDensity, integrand_power: int = 0) -> float:
    """``int exp(-nu p^2) p^k d(p) dp`` (node quadrature plus analytic tails)."""
    k = int(integrand_power)
    if k < 0:
        raise ContractViolation("integrand_power must be non-negative", k=k)
    p = d.grid.nodes
    body = float(np.sum(d.grid.quad_weights * np.exp(-d.nu * p * p) * p ** k
                        * _quadrature_values(d)))
    t = tail_moment(d.nu, d.grid.p_max, k)
    return body + t * (d.tail_plus + (-1) ** k * d.tail_minus)


def signed_integral(d: GriddedDensity, integrand_power: int = 0) -> float:
    """``int sign(p) exp(-nu p^2) p^k d(p) dp``; the sign jump is corrected like any other."""
    k = int(integrand_power)
    p = d.grid.nodes
    body = float(np.sum(d.grid.quad_weights * np.exp(-d.nu * p * p) * p ** k
                        * effective_values(np.sign(p) * d.values)))
    t = tail_moment(d.nu, d.grid.p_max, k)
    return body + t * (d.tail_plus - (-1) ** k * d.tail_minus)


def norm_G1_F1(d: GriddedDensity) -> float:
    """Weighted L1 norm ``int exp(-nu p^2) |d|``."""
    return weighted_integral(d.abs(), 0)


def total_variation(d: GriddedDensity) -> float:
    v = d.values
    return float(np.sum(np.abs(np.diff(v))) + abs(v[0] - d.tail_minus)
                 + abs(v[-1] - d.tail_plus))


def cone_check(v: GriddedDensity) -> ConeReport:
    if v.nu != 1.0:
        raise ContractViolation("cone_check expects a particle density (nu = 1)", nu=v.nu)
    mass = weighted_integral(v, 0)
    if not mass > 0.0:
        raise DegenerateDensity("int exp(-p^2) v dp is not positive", integral=mass)
    Z = math.sqrt(math.pi) / mass
    tp = Z * max(v.tail_minus, v.tail_plus)
    nonneg = bool(np.all(v.values >= 0.0) and v.tail_minus >= 0.0 and v.tail_plus >= 0.0)
    return ConeReport(Z=Z, tail_product=tp, margin=1.0 - tp, in_cone=nonneg and tp < 1.0 - CONE_TOL)


def sample(d: GriddedDensity, p) -> np.ndarray | float:
    """Linear interpolation between nodes, tail constants beyond the outer nodes."""
    x = np.asarray(p, dtype=float)
    nodes = d.grid.nodes
    out = np.interp(x, nodes, d.values)
    out = np.where(x < nodes[0], d.tail_minus, out)
    out = np.where(x > nodes[-1], d.tail_plus, out)
    return float(out) if out.ndim == 0 else out


def sample_smooth(d: GriddedDensity, p, split: bool = True) -> np.ndarray:
    """8-point Lagrange interpolation, optionally never straddling p = 0."""
    x = np.atleast_1d(np.asarray(p, dtype=float))
    return kernels.sample_many(np.ascontiguousarray(d.values), d.tail_minus, d.tail_plus,
                               d.grid.h, x, split)


@dataclass(frozen=True, eq=False)
class HalfDensity:
    """Restriction of a weighted particle density to one sign of p.

    ``values`` follow the ascending node order of that half; ``tail`` is the
    limit at +inf (sign=+1) or -inf (sign=-1).
    """

    grid: MomentumGrid
    sign: int
    values: np.ndarray
    tail: float

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.grid.n // 2,):
            raise ContractViolation("half-density size mismatch", expected=self.grid.n // 2,
                                    got=list(vals.shape))
        if self.sign not in (1, -1):
            raise ContractViolation("sign must be +1 or -1", sign=self.sign)
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "tail", float(self.tail))

    @property
    def nodes(self) -> np.ndarray:
        half = self.grid.n // 2
        return self.grid.nodes[half:] if self.sign > 0 else self.grid.nodes[:half]

    @property
    def F(self) -> np.ndarray:
        """Values in F-units, ``exp(-p^2) v``."""
        return np.exp(-self.nodes ** 2) * self.values

    @classmethod
    def from_F(cls, grid, sign, F_values, tail) -> "HalfDensity":
        nodes = grid.nodes[grid.n // 2:] if sign > 0 else grid.nodes[:grid.n // 2]
        return cls(grid, sign, np.exp(nodes ** 2) * np.asarray(F_values, float), tail)

    @classmethod
    def of(cls, d: GriddedDensity, sign: int) -> "HalfDensity":
        half = d.grid.n // 2
        if sign > 0:
            return cls(d.grid, 1, d.values[half:], d.tail_plus)
        return cls(d.grid, -1, d.values[:half], d.tail_minus)

    @property
    def state(self) -> np.ndarray:
        return np.concatenate([self.values, [self.tail]])

    def with_state(self, state) -> "HalfDensity":
        return HalfDensity(self.grid, self.sign, state[:-1], state[-1])

    def mirrored(self) -> "HalfDensity":
        """The same profile on the opposite half-line, p -> -p."""
        return HalfDensity(self.grid, -self.sign, self.values[::-1], self.tail)


def assemble(minus: HalfDensity, plus: HalfDensity) -> GriddedDensity:
    """Join two halves into a full-line particle density."""
    if minus.sign != -1 or plus.sign != 1 or minus.grid != plus.grid:
        raise ContractViolation("assemble needs a negative and a positive half on one grid")
    vals = np.concatenate([minus.values, plus.values])
    return GriddedDensity(plus.grid, vals, minus.tail, plus.tail, 1.0)
