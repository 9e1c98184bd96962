"""Stationary chain of N scattering cells and its comparison with the continuum.

Each cell holds one scatterer. Particles enter from both sides, are scattered
with probability gamma = b/N and otherwise pass through. The scatterer density
of a cell is the normalised fixed point for the cell's incoming flux, and the
outgoing flux of the cell feeds its neighbours.

All flux data are kept as half-densities in weighted form (v = exp(p^2) F);
``HalfDensity.F`` gives F-units. For gamma = 1 the outgoing flux of a cell is
exactly the gain term of the spatial equation, which is how the one-cell
collision integral is evaluated here.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (ConeViolationWarning, ContractViolation, MaxIterations, MismatchedConfig,
                     ZeroFlux)
from .grid import (GriddedDensity, HalfDensity, ModelParams, MomentumGrid, assemble,
                   weighted_integral)
from .scatterer import fixed_point
from .transport import FluxTriple, Profile, fluxes, gain, gain_tails


@dataclass(frozen=True)
class MaxwellianSpec:
    """Flux-weighted Maxwellian ``F(p) = amplitude exp(-beta (p - m a)^2 / (2m))``."""

    beta: float = 2.0
    drift: float = 0.0
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.beta > 0.0:
            raise ContractViolation("beta must be positive", beta=self.beta)
        if not self.amplitude > 0.0:
            raise ContractViolation("amplitude must be positive", amplitude=self.amplitude)

    def F(self, p, m: float = 1.0):
        p = np.asarray(p, dtype=float)
        return self.amplitude * np.exp(-self.beta * (p - m * self.drift) ** 2 / (2.0 * m))

    def half(self, grid: MomentumGrid, sign: int, m: float = 1.0, tail: float = 0.0,
             perturbation=None) -> HalfDensity:
        """Restriction to one sign of p; ``perturbation(p)`` multiplies F if given.

        ``tail`` is the weighted limit at infinity; F itself vanishes there, so
        the default 0 only sets how the representation extends past p_max.
        """
        nodes = grid.nodes[grid.n // 2:] if sign > 0 else grid.nodes[:grid.n // 2]
        F = self.F(nodes, m)
        if perturbation is not None:
            F = F * np.asarray(perturbation(nodes), dtype=float)
        return HalfDensity.from_F(grid, sign, F, tail)

    def scatterer_density(self, P, params: ModelParams):
        """Matching scatterer density sqrt(beta/(2 pi M)) exp(-beta (P - M a)^2/(2M))."""
        P = np.asarray(P, dtype=float)
        M = params.M
        return math.sqrt(self.beta / (2.0 * math.pi * M)) * np.exp(
            -self.beta * (P - M * self.drift) ** 2 / (2.0 * M))

    def to_dict(self) -> dict:
        return {"beta": self.beta, "drift": self.drift, "amplitude": self.amplitude}


@dataclass(frozen=True)
class ChainParams:
    N: int
    b: float
    left: HalfDensity
    right: HalfDensity
    sweep_tol: float = 1e-10
    max_sweeps: int = 500
    omega: float = 0.7
    fp_tol: float = 1e-13

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ContractViolation("N must be a positive integer", N=self.N)
        if not self.b >= 0.0:
            raise ContractViolation("b must be nonnegative", b=self.b)
        if self.b > self.N:
            raise ContractViolation("b/N is a probability; need b <= N", b=self.b, N=self.N)
        if self.left.sign != 1 or self.right.sign != -1:
            raise ContractViolation("left data must be the p > 0 half, right data the p < 0 half")
        if self.left.grid != self.right.grid:
            raise ContractViolation("boundary halves live on different grids")
        if not 0.0 < self.omega <= 1.0:
            raise ContractViolation("omega must lie in (0, 1]", omega=self.omega)

    @property
    def gamma(self) -> float:
        return self.b / self.N

    @property
    def grid(self) -> MomentumGrid:
        return self.left.grid

    def to_dict(self) -> dict:
        return {"N": int(self.N), "b": self.b, "gamma": self.gamma, "sweep_tol": self.sweep_tol,
                "max_sweeps": self.max_sweeps, "omega": self.omega}


@dataclass
class CellState:
    F_in_left: HalfDensity
    F_in_right: HalfDensity
    g: GriddedDensity
    F_out_left: HalfDensity
    F_out_right: HalfDensity

    @property
    def incoming(self) -> GriddedDensity:
        return assemble(self.F_in_right, self.F_in_left)

    def g_physical(self) -> np.ndarray:
        return self.g.physical()


@dataclass
class ChainSolution:
    cells: list
    sweeps: int
    max_change: float
    interface_fluxes: list

    def __iter__(self):
        return iter(self.cells)

    def __len__(self):
        return len(self.cells)

    def __getitem__(self, i):
        return self.cells[i]


def solve_cell(F_in: GriddedDensity, params: ModelParams, tol: float = 1e-13,
               u0: GriddedDensity | None = None) -> GriddedDensity:
    """Scatterer density of a single cell (weighted, normalised to int g = 1).

    ``F_in`` is the full-line incoming flux in weighted form.
    """
    lam = weighted_integral(F_in, 0)
    if not lam > 0.0:
        raise ZeroFlux("incoming particle flux must be positive", flux=lam)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConeViolationWarning)
        fp = fixed_point(F_in, params, tol=tol, u0=u0)
    return fp.u


def cell_outgoing(g: GriddedDensity, F_in: GriddedDensity,
                  params: ModelParams) -> tuple[HalfDensity, HalfDensity]:
    """Scattered outgoing halves (left-moving, right-moving) of one collision.

    The outgoing density at p' is ``1/(1-rho) int g((p' + rho p)/(1-rho)) F_in(p) dp``;
    in weighted form this is the gain term S[v, u].
    """
    S = gain(F_in, g, params)
    lo, hi = gain_tails(F_in, g, params)
    out = GriddedDensity(F_in.grid, S, lo, hi, 1.0)
    return HalfDensity.of(out, -1), HalfDensity.of(out, 1)


def _mix(a: HalfDensity, b: HalfDensity, t: float) -> HalfDensity:
    """(1 - t) a + t b."""
    return a.with_state((1.0 - t) * a.state + t * b.state)


def _change(a: HalfDensity, b: HalfDensity) -> float:
    return float(max(np.max(np.abs(a.F - b.F)), abs(a.tail - b.tail)))


def interface_flux(right_moving: HalfDensity, left_moving: HalfDensity,
                   params: ModelParams) -> FluxTriple:
    return fluxes(assemble(left_moving, right_moving), params)


def solve_chain(cp: ChainParams, params: ModelParams) -> ChainSolution:
    """Gauss-Seidel sweeps (left to right, then right to left) to the stationary chain.

    Interface k (0..N) carries the right-moving half R[k] and the left-moving
    half L[k]; cell i sits between interfaces i-1 and i. Updates of the
    outgoing halves are under-relaxed by ``omega``.
    """
    N = int(cp.N)
    gam = cp.gamma
    R = [cp.left] * (N + 1)
    L = [cp.right] * (N + 1)
    us = [None] * (N + 1)

    def update(i):
        f = assemble(L[i], R[i - 1])
        u = solve_cell(f, params, tol=cp.fp_tol, u0=us[i])
        us[i] = u
        s_left, s_right = cell_outgoing(u, f, params)
        new_r = _mix(_mix(R[i - 1], s_right, gam), R[i], 1.0 - cp.omega)
        new_l = _mix(_mix(L[i], s_left, gam), L[i - 1], 1.0 - cp.omega)
        d = max(_change(new_r, R[i]), _change(new_l, L[i - 1]))
        R[i] = new_r
        L[i - 1] = new_l
        return d

    change = math.inf
    sweeps = 0
    while change >= cp.sweep_tol:
        if sweeps >= cp.max_sweeps:
            raise MaxIterations("chain sweeps did not converge", sweeps=sweeps,
                                max_change=change)
        change = 0.0
        for i in range(1, N + 1):
            change = max(change, update(i))
        for i in range(N, 0, -1):
            change = max(change, update(i))
        sweeps += 1
    cells = []
    for i in range(1, N + 1):
        f = assemble(L[i], R[i - 1])
        u = solve_cell(f, params, tol=cp.fp_tol, u0=us[i])
        cells.append(CellState(F_in_left=R[i - 1], F_in_right=L[i], g=u,
                               F_out_left=L[i - 1], F_out_right=R[i]))
    iface = [interface_flux(R[k], L[k], params) for k in range(N + 1)]
    return ChainSolution(cells=cells, sweeps=sweeps, max_change=change, interface_fluxes=iface)


def _station_at(profile: Profile, x: float):
    xs = profile.xs
    j = int(np.argmin(np.abs(xs - x)))
    if abs(xs[j] - x) <= 1e-9 * max(1.0, abs(x)):
        return profile.stations[j].v.physical()
    if not xs[0] <= x <= xs[-1]:
        raise MismatchedConfig("continuum profile does not cover the cell centre", x=x,
                               x_min=float(xs[0]), x_max=float(xs[-1]))
    k = int(np.searchsorted(xs, x))
    a, b = profile.stations[k - 1], profile.stations[k]
    t = (x - a.x) / (b.x - a.x)
    return (1.0 - t) * a.v.physical() + t * b.v.physical()


def compare_to_continuum(cells, profile: Profile, b: float, lambda_scale: float | None = None,
                         length: float = 1.0) -> dict:
    """Chain incoming flux per cell against the continuum at the cell centres.

    The chain with N cells over ``length`` matches the continuum equation with
    ``lambda_scale = b / length``; a continuum run with another ``lambda_scale``
    is compared at the rescaled positions ``x_i b / (lambda_scale length)``.
    Errors are in F-units: sup over cells and nodes, and the mean over cells
    of ``int |F_chain - F_cont| dp``.
    """
    cells = list(cells)
    if not cells:
        raise MismatchedConfig("empty chain")
    N = len(cells)
    grid = cells[0].F_in_left.grid
    if profile.stations[0].v.grid != grid:
        raise MismatchedConfig("chain and continuum use different momentum grids")
    lam = b / length if lambda_scale is None else lambda_scale
    if lam == 0.0:
        if b != 0.0:
            raise MismatchedConfig("continuum run without scattering against b > 0")
        scale = 1.0
    else:
        scale = b / (lam * length)
        if b == 0.0:
            raise MismatchedConfig("b = 0 chain needs a continuum run with lambda_scale = 0")
    sup = 0.0
    l1 = 0.0
    per_cell = []
    for i, c in enumerate(cells, start=1):
        x = (i - 0.5) / N * length * scale
        Fc = _station_at(profile, x)
        d = np.abs(c.incoming.physical() - Fc)
        per_cell.append(float(np.max(d)))
        sup = max(sup, per_cell[-1])
        l1 += float(np.sum(d) * grid.h)
    return {"N": N, "sup_error": sup, "l1_error": l1 / N, "per_cell_sup": per_cell}


__all__ = ["CellState", "ChainParams", "ChainSolution", "MaxwellianSpec", "cell_outgoing",
           "compare_to_continuum", "interface_flux", "solve_cell", "solve_chain"]
