"""Two-sided boundary-value problem: shooting map, its Newton inversion, and a
time-relaxation oracle.

Boundary data fix the incoming halves: the positive-momentum half at x = 0 and
the negative-momentum half at x = x_end. Shooting treats the negative half at
x = 0 as the unknown, marches the spatial equation to x_end and compares the
negative half there with the data.

Unknowns are handled in weighted units (v = exp(p^2) F) so that the Jacobian
is a small perturbation of the identity at every node; residuals are reported
in F-units.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (CFLViolation, ConeViolationWarning, ContractViolation,
                     EvolveTerminatedEarly, MaxIterations, NegativeDensity, NewtonStalled,
                     NotConverged)
from .grid import (GriddedDensity, HalfDensity, ModelParams, assemble, cone_check,
                   weighted_integral)
from .scatterer import apply_Kv, fixed_point, scatterer_grid
from .transport import Profile, Station, Termination, evolve, fluxes, rhs

NEWTON_HALVINGS = 8
FD_STEP = 1e-6
# the Jacobian is kept while each full step contracts the residual this much
REUSE_CONTRACTION = 0.1


@dataclass(frozen=True)
class BoundaryData:
    """Incoming halves: ``F0_plus`` (p > 0 at x = 0), ``F1_minus`` (p < 0 at x_end)."""

    F0_plus: HalfDensity
    F1_minus: HalfDensity
    unsupported_regime: bool = False

    def __post_init__(self):
        if self.F0_plus.sign != 1 or self.F1_minus.sign != -1:
            raise ContractViolation("boundary data need a positive half at 0 and a negative "
                                    "half at x_end")
        if self.F0_plus.grid != self.F1_minus.grid:
            raise ContractViolation("boundary halves live on different grids")
        for half in (self.F0_plus, self.F1_minus):
            if np.any(half.values < 0.0) or half.tail < 0.0:
                raise ContractViolation("boundary data must be nonnegative")

    @property
    def grid(self):
        return self.F0_plus.grid


@dataclass
class ShootResult:
    F0_minus: HalfDensity
    profile: Profile
    residual_sup: float
    newton_iterations: int
    residual_history: list = field(default_factory=list)
    unsupported_regime: bool = False
    jacobian_evaluations: int = 0

    def summary(self) -> dict:
        return {"residual_sup": self.residual_sup, "newton_iterations": self.newton_iterations,
                "residual_history": list(self.residual_history),
                "jacobian_evaluations": self.jacobian_evaluations,
                "termination": self.profile.termination.to_dict(),
                "unsupported_regime": self.unsupported_regime}


def _shoot(F0_minus: HalfDensity, F0_plus: HalfDensity, x_end, tol, params,
           lambda_scale=1.0, schedule=None, x_eval=None) -> Profile:
    v0 = assemble(F0_minus, F0_plus)
    rep = cone_check(v0)
    if not rep.in_cone:
        term = Termination("ConeExit", 0.0, ("ConeExit",), "initial assembly outside the cone")
        raise EvolveTerminatedEarly("assembled initial density is outside the cone",
                                    termination=term, **rep.to_dict())
    prof = evolve(v0, x_end, tol, params, lambda_scale=lambda_scale, schedule=schedule,
                  x_eval=x_eval)
    if not prof.completed:
        t = prof.termination
        raise EvolveTerminatedEarly(f"evolve stopped early: {t.kind} at x = {t.x:.6g}",
                                    termination=t, kind=t.kind, x=t.x)
    return prof


def forward_map(F0_minus: HalfDensity, F0_plus: HalfDensity, x_end: float, tol: float,
                params: ModelParams, lambda_scale: float = 1.0) -> HalfDensity:
    """Negative half of v(., x_end) for the full incoming data at x = 0."""
    prof = _shoot(F0_minus, F0_plus, x_end, tol, params, lambda_scale)
    return HalfDensity.of(prof.final().v, -1)


def _sup_F(half_state, grid) -> float:
    """Sup norm in F-units of a negative-half state (nodes, tail)."""
    nodes = grid.nodes[:grid.n // 2]
    return float(max(np.max(np.abs(np.exp(-nodes ** 2) * half_state[:-1])),
                     abs(half_state[-1])))


def solve_bvp(bd: BoundaryData, x_end: float, tol: float, params: ModelParams,
              lambda_scale: float = 1.0, evolve_tol: float | None = None,
              max_newton: int = 8, workers: int = 1, x_eval=None) -> ShootResult:
    """Damped Newton on F0_minus with a forward-difference Jacobian.

    The Jacobian columns replay the step schedule of the base shoot, so every
    column differences two runs of the same discrete map. A Jacobian is
    reused for later steps while full steps keep contracting the residual by
    ``REUSE_CONTRACTION``. The first guess is the mirror image of F0_plus.
    """
    if not tol > 0.0:
        raise ContractViolation("tol must be positive", tol=tol)
    grid = bd.grid
    etol = evolve_tol if evolve_tol is not None else min(1e-8, 0.1 * tol)
    F0_plus = bd.F0_plus
    target = bd.F1_minus.state

    def residual(state, schedule=None):
        guess = HalfDensity(grid, -1, state[:-1], state[-1])
        prof = _shoot(guess, F0_plus, x_end, etol, params, lambda_scale, schedule)
        return HalfDensity.of(prof.final().v, -1).state - target, prof

    x = F0_plus.mirrored().state.copy()
    r, prof = residual(x)
    history = [_sup_F(r, grid)]
    it = 0
    J = None
    jacobians = 0
    while history[-1] > tol:
        if it >= max_newton:
            raise MaxIterations("Newton iteration limit reached", iterations=it,
                                residual_sup=history[-1])
        it += 1
        if J is None:
            J = _jacobian(residual, x, prof.stats["steps"], workers)
            jacobians += 1
        try:
            dx = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError as exc:
            raise NewtonStalled("singular Jacobian", iterations=it) from exc
        t = 1.0
        for _ in range(NEWTON_HALVINGS + 1):
            trial = x + t * dx
            try:
                r_new, prof_new = residual(trial)
                if _sup_F(r_new, grid) < history[-1] or np.max(np.abs(r_new)) < np.max(np.abs(r)):
                    break
            except (EvolveTerminatedEarly, NotConverged):
                pass
            t *= 0.5
        else:
            raise NewtonStalled("no residual decrease after step halving", iterations=it,
                                residual_sup=history[-1], halvings=NEWTON_HALVINGS)
        x, r, prof = trial, r_new, prof_new
        history.append(_sup_F(r, grid))
        if t < 1.0 or history[-1] > REUSE_CONTRACTION * history[-2]:
            J = None
    if x_eval is not None:
        prof = _shoot(HalfDensity(grid, -1, x[:-1], x[-1]), F0_plus, x_end, etol, params,
                      lambda_scale, x_eval=x_eval)
    return ShootResult(F0_minus=HalfDensity(grid, -1, x[:-1], x[-1]), profile=prof,
                       residual_sup=history[-1], newton_iterations=it,
                       residual_history=history, unsupported_regime=bd.unsupported_regime,
                       jacobian_evaluations=jacobians)


def _jacobian(residual, x, schedule, workers):
    base, _ = residual(x, schedule)
    steps = FD_STEP * np.maximum(np.abs(x), 1.0)

    def column(j):
        xp = x.copy()
        xp[j] += steps[j]
        rp, _ = residual(xp, schedule)
        return (rp - base) / steps[j]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            cols = list(pool.map(column, range(x.size)))
    else:
        cols = [column(j) for j in range(x.size)]
    return np.column_stack(cols)


def basin_radius(F0_minus_star: HalfDensity, F0_plus: HalfDensity, x_end: float, tol: float,
                 params: ModelParams, amplitudes=(0.01, 0.03, 0.1, 0.3, 1.0),
                 bump_centre: float = -1.0, bump_width: float = 0.5) -> dict:
    """Largest tested bump amplitude whose manufactured problem Newton still solves.

    The negative half is perturbed by ``a * exp(-((p - c)/w)^2)`` (F-units),
    shot forward to build the data, and re-solved from the mirrored guess.
    """
    grid = F0_plus.grid
    nodes = grid.nodes[:grid.n // 2]
    bump = np.exp(-((nodes - bump_centre) / bump_width) ** 2)
    rows = []
    radius = 0.0
    for a in amplitudes:
        F = F0_minus_star.F + a * bump
        star = HalfDensity.from_F(grid, -1, F, F0_minus_star.tail)
        try:
            data = forward_map(star, F0_plus, x_end, min(1e-8, 0.1 * tol), params)
            res = solve_bvp(BoundaryData(F0_plus, data), x_end, tol, params)
            err = float(np.max(np.abs(res.F0_minus.F - star.F)))
            ok = err <= max(100.0 * tol, 1e-6)
            rows.append({"amplitude": a, "converged": True, "recovery_error": err,
                         "newton_iterations": res.newton_iterations})
        except (EvolveTerminatedEarly, NotConverged, ContractViolation) as exc:
            ok = False
            rows.append({"amplitude": a, "converged": False, "error": exc.kind})
        if not ok:
            break
        radius = a
    return {"basin_radius": radius, "trials": rows}


# ---------------------------------------------------------------------------
# relaxation oracle

def _cell_rhs(v: GriddedDensity, u: GriddedDensity, params, lambda_scale):
    """lambda (S - v C) at the nodes and both tails (no sign factor)."""
    w = rhs(v, u, params, lambda_scale=lambda_scale)
    sgn = np.concatenate([np.sign(v.grid.nodes), [-1.0, 1.0]])
    return sgn * w.state


def relax_oracle(bd: BoundaryData, x_end: float, t_end: float, cfl: float,
                 params: ModelParams, cells: int = 64, lambda_scale: float = 1.0,
                 time_stepping: str = "local", scatterer_update: str = "resolve",
                 resolve_every: int = 4, omega: float = 1.0, steady_tol: float = 1e-8,
                 fp_tol: float = 1e-12, max_steps: int = 1_000_000) -> Profile:
    """Time-march the kinetic equation to steady state with first-order upwinding.

    Cell k covers ``[(k-1) dx, k dx]``. Positive momenta are upwinded from the
    left, negative ones from the right; the inflow values come from ``bd``.
    ``time_stepping="global"`` uses the physical step ``cfl dx m / p_max`` for
    all nodes; ``"local"`` gives each momentum node its own CFL-limited step,
    which changes only the transient. The scatterer densities are re-solved as
    fixed points every ``resolve_every`` steps (``"resolve"``) or relaxed by
    ``u <- u + omega (K_v u - u)`` each step (``"iterate"``). Stops when the
    largest update per unit pseudo-time falls below ``steady_tol`` or at
    ``t_end``; the snapshot is returned with stations at the cell centres.
    """
    if not 0.0 < cfl < 1.0:
        raise CFLViolation("cfl must lie in (0, 1)", cfl=cfl)
    if time_stepping not in ("local", "global"):
        raise ContractViolation("time_stepping must be 'local' or 'global'",
                                value=time_stepping)
    if scatterer_update not in ("resolve", "iterate"):
        raise ContractViolation("scatterer_update must be 'resolve' or 'iterate'",
                                value=scatterer_update)
    if cells < 1:
        raise ContractViolation("need at least one cell", cells=cells)
    grid = bd.grid
    n = grid.n
    half = n // 2
    dx = x_end / cells
    p = grid.nodes
    # the equation is d_t v + c sign(p) d_x v = c lambda (S - v C), c = |p|/m
    speed = np.concatenate([np.abs(p), [grid.p_max, grid.p_max]]) / params.m
    dt = cfl * dx * params.m / grid.p_max
    cdt = speed * dt if time_stepping == "global" else np.full(n + 2, cfl * dx)
    nu_cfl = cdt / dx
    pos = np.zeros(n + 2, dtype=bool)
    pos[half:n] = True
    pos[-1] = True
    neg = ~pos
    # inflow ghosts; the initial state copies the incoming data across the rod
    base = np.empty(n + 2)
    base[:half] = bd.F1_minus.values
    base[half:n] = bd.F0_plus.values
    base[n] = bd.F1_minus.tail
    base[n + 1] = bd.F0_plus.tail
    Y = np.tile(base, (cells, 1))
    ghost_l = base
    ghost_r = base
    us = [None] * cells
    u_grid = scatterer_grid(grid, params)

    def solve_u(k, y):
        v = GriddedDensity.from_state(grid, y, 1.0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConeViolationWarning)
            fp = fixed_point(v, params, tol=fp_tol, u0=us[k])
        us[k] = fp.u

    for k in range(cells):
        solve_u(k, Y[k])
    t = 0.0
    steps = 0
    rate = np.inf
    while t < t_end and steps < max_steps:
        if steps and steps % resolve_every == 0 and scatterer_update == "resolve":
            for k in range(cells):
                solve_u(k, Y[k])
        R = np.empty_like(Y)
        for k in range(cells):
            v = GriddedDensity.from_state(grid, Y[k], 1.0)
            if scatterer_update == "iterate":
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", ConeViolationWarning)
                    ku = apply_Kv(v, us[k], params)
                st = us[k].state + omega * (ku.state - us[k].state)
                st = st / weighted_integral(GriddedDensity.from_state(u_grid, np.abs(st),
                                                                      params.mu), 0)
                us[k] = GriddedDensity.from_state(u_grid, st, params.mu)
            R[k] = _cell_rhs(v, us[k], params, lambda_scale)
        up = np.vstack([ghost_l, Y[:-1]])
        down = np.vstack([Y[1:], ghost_r])
        diff = np.where(pos, Y - up, Y - down)
        upd = -nu_cfl * diff + cdt * R
        if not np.all(np.isfinite(upd)):
            raise NegativeDensity("relaxation produced non-finite values", step=steps)
        Y = Y + upd
        steps += 1
        t += dt
        F = Y[:, :n] * np.exp(-p ** 2)
        if F.min() < -1e-8 or min(Y[:, n].min(), Y[:, n + 1].min()) < -1e-8:
            raise NegativeDensity("relaxation produced a negative density", step=steps,
                                  min_F=float(F.min()))
        rate = float(np.max(np.abs(upd) / cdt))
        if rate < steady_tol:
            break
    for k in range(cells):
        solve_u(k, Y[k])
    stations = []
    for k in range(cells):
        v = GriddedDensity.from_state(grid, Y[k], 1.0)
        stations.append(Station(x=(k + 0.5) * dx, v=v, u=us[k], fluxes=fluxes(v, params),
                                C=weighted_integral(us[k], 0)))
    kind = "Completed" if rate < steady_tol else "StepUnderflow"
    term = Termination(kind, x_end, () if kind == "Completed" else ("NotSteady",),
                       "" if kind == "Completed" else f"time derivative {rate:.3g} at t_end")
    return Profile(stations=stations, termination=term,
                   stats={"time_steps": steps, "t": t, "time_derivative": rate,
                          "cells": cells, "dx": dx, "time_stepping": time_stepping,
                          "scatterer_update": scatterer_update})


def profile_difference_F(a: Profile, b: Profile) -> float:
    """Sup over matching stations and nodes of |F_a - F_b| (F-units)."""
    if len(a.stations) != len(b.stations):
        raise ContractViolation("profiles have different station counts")
    out = 0.0
    for sa, sb in zip(a.stations, b.stations):
        if not math.isclose(sa.x, sb.x, rel_tol=1e-9, abs_tol=1e-12):
            raise ContractViolation("profiles sample different x", xa=sa.x, xb=sb.x)
        out = max(out, float(np.max(np.abs(sa.v.physical() - sb.v.physical()))))
    return out


__all__ = ["BoundaryData", "ShootResult", "basin_radius", "forward_map",
           "profile_difference_F", "relax_oracle", "solve_bvp"]
