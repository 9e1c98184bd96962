"""Stationary spatial evolution of the particle density and flux diagnostics.

The weighted particle density obeys ``d v/dx = lambda sign(p) (S[v,u](p) - v C)``
with ``u = u_v`` the normalised scatterer fixed point, ``C = int exp(-mu q^2) u``
and the gain term ``S[v,u](p) = int exp(-mu P^2) v(-rho p + (1-rho) P)
u((1+rho) p + rho P) dP``. The production path evaluates S on the lattice of v;
the P-integral above is kept as an independent second path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from ._lagrange import CORR
from .errors import ContractViolation, DegenerateDensity, NotConverged
from .grid import (GriddedDensity, ModelParams, cone_check, jump_polynomial,
                   signed_integral, weighted_integral)
from .scatterer import WIDTH, FixedPointResult, fixed_point

FORMS = ("lav", "champ")


@dataclass(frozen=True)
class FluxTriple:
    phi_P: float
    phi_M: float
    phi_E: float

    def as_array(self) -> np.ndarray:
        return np.array([self.phi_P, self.phi_M, self.phi_E])

    def to_dict(self) -> dict:
        return {"phi_P": self.phi_P, "phi_M": self.phi_M, "phi_E": self.phi_E}


def gain(v: GriddedDensity, u: GriddedDensity, params: ModelParams, form: str = "lav") -> np.ndarray:
    """Gain term S[v,u] at the nodes of v (tails excluded)."""
    if form == "lav":
        B = kernels.gain_matrix(np.ascontiguousarray(v.values), v.tail_minus, v.tail_plus,
                                jump_polynomial(v.values), np.ascontiguousarray(v.grid.nodes),
                                u.grid.n, v.grid.h, params.rho, WIDTH)
        return B @ u.state
    if form == "champ":
        return kernels.gain_champ(np.ascontiguousarray(v.values), v.tail_minus, v.tail_plus,
                                  np.ascontiguousarray(u.values), u.tail_minus, u.tail_plus,
                                  CORR, jump_polynomial(v.values),
                                  np.ascontiguousarray(v.grid.nodes), v.grid.h, params.rho,
                                  params.mu, WIDTH)
    raise ContractViolation(f"unknown rhs form {form!r}", allowed=list(FORMS))


def gain_tails(v: GriddedDensity, u: GriddedDensity, params: ModelParams) -> tuple[float, float]:
    """Limits of S[v,u] at -inf and +inf."""
    c = math.sqrt(math.pi / params.mu)
    return c * u.tail_minus * v.tail_plus, c * u.tail_plus * v.tail_minus


def rhs(v: GriddedDensity, u: GriddedDensity, params: ModelParams, grid=None,
        lambda_scale: float = 1.0, form: str = "lav") -> GriddedDensity:
    """Right-hand side w of the spatial equation (weighted form, nu = 1)."""
    if v.nu != 1.0 or u.nu != params.mu:
        raise ContractViolation("rhs expects v (nu=1) and u (nu=mu)")
    C = weighted_integral(u, 0)
    S = gain(v, u, params, form)
    p = v.grid.nodes
    w = lambda_scale * np.sign(p) * (S - v.values * C)
    s_lo, s_hi = gain_tails(v, u, params)
    w_lo = -lambda_scale * (s_lo - v.tail_minus * C)
    w_hi = lambda_scale * (s_hi - v.tail_plus * C)
    return GriddedDensity(v.grid, w, w_lo, w_hi, 1.0)


def fluxes(v: GriddedDensity, params: ModelParams, grid=None) -> FluxTriple:
    """Particle flux, momentum activity and energy flux of F = exp(-p^2) v."""
    return FluxTriple(signed_integral(v, 0), signed_integral(v, 1),
                      signed_integral(v, 2) / (2.0 * params.m))


def drifted_maxwellian_fluxes(beta: float, a: float, m: float) -> FluxTriple:
    """Closed-form fluxes of F = exp(-beta (p - m a)^2 / (2m)).

    The energy flux carries the 1/(2m) of its definition; the commonly quoted
    display omits it (it equals 2m times the value returned here).
    """
    e = math.erf(a * math.sqrt(beta * m / 2.0))
    g = math.exp(-beta * m * a * a / 2.0)
    phi_P = math.sqrt(2.0 * m * math.pi / beta) * e
    phi_M = 2.0 * m / beta * g + a * math.sqrt(2.0 * m ** 3 * math.pi / beta) * e
    second = 2.0 * a * m * m / beta * g + (1.0 + beta * m * a * a) * math.sqrt(
        2.0 * m ** 3 * math.pi / beta ** 3) * e
    return FluxTriple(phi_P, phi_M, second / (2.0 * m))


@dataclass
class Station:
    x: float
    v: GriddedDensity
    u: GriddedDensity
    fluxes: FluxTriple
    C: float
    fp_iterations: int = 0
    fp_residual: float = 0.0


@dataclass
class Termination:
    kind: str  # Completed | ConeExit | Negativity | StepUnderflow
    x: float
    events: tuple = ()
    message: str = ""

    def to_dict(self) -> dict:
        return {"kind": self.kind, "x": self.x, "events": list(self.events),
                "message": self.message}


@dataclass
class Profile:
    stations: list
    termination: Termination
    stats: dict = field(default_factory=dict)

    @property
    def xs(self) -> np.ndarray:
        return np.array([s.x for s in self.stations])

    @property
    def completed(self) -> bool:
        return self.termination.kind == "Completed"

    def final(self) -> Station:
        return self.stations[-1]

    def flux_table(self) -> list[dict]:
        return [{"x": s.x, **s.fluxes.to_dict(), "C": s.C} for s in self.stations]


def flux_drift(profile: Profile) -> float:
    if len(profile.stations) < 2:
        return 0.0
    f0 = profile.stations[0].fluxes.as_array()
    scale = np.maximum(np.abs(f0), 1.0)
    return float(max(np.max(np.abs(s.fluxes.as_array() - f0) / scale)
                     for s in profile.stations))


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100,
                1 / 40])


class _Field:
    """State -> derivative map with warm-started fixed points."""

    def __init__(self, grid, params, lambda_scale, fp_tol, form):
        self.grid = grid
        self.params = params
        self.scale = lambda_scale
        self.fp_tol = fp_tol
        self.form = form
        self.u_warm = None
        self.evaluations = 0
        self.fp_iterations = 0

    def __call__(self, y):
        v = GriddedDensity.from_state(self.grid, y, 1.0)
        if not cone_check(v).in_cone:
            raise _StageOutsideCone()
        fp = fixed_point(v, self.params, tol=self.fp_tol, u0=self.u_warm)
        self.u_warm = fp.u
        self.evaluations += 1
        self.fp_iterations += fp.iterations
        w = rhs(v, fp.u, self.params, lambda_scale=self.scale, form=self.form)
        return w.state, fp


class _StageOutsideCone(Exception):
    pass


def _station(x, y, fp: FixedPointResult, grid, params) -> Station:
    v = GriddedDensity.from_state(grid, y, 1.0)
    return Station(x=x, v=v, u=fp.u, fluxes=fluxes(v, params), C=weighted_integral(fp.u, 0),
                   fp_iterations=fp.iterations, fp_residual=fp.final_residual)


def evolve(v0: GriddedDensity, x_end: float, tol: float, params: ModelParams,
           lambda_scale: float = 1.0, x_eval=None, fp_tol: float = 1e-13,
           h0: float | None = None, max_steps: int = 100_000, form: str = "lav",
           schedule=None) -> Profile:
    """Integrate the spatial equation from x = 0 to ``x_end`` (embedded RK 5(4)).

    Stations are recorded at accepted steps (and at the points of ``x_eval``,
    which the steps are clipped to hit). Events end the march early and are
    reported in ``Profile.termination``. ``stats["steps"]`` lists the accepted
    step sizes; passing such a list back as ``schedule`` replays those steps
    without error control, which makes the end state a smooth function of v0
    (used for finite-difference Jacobians).
    """
    if not x_end > 0.0:
        raise ContractViolation("x_end must be positive", x_end=x_end)
    if not tol > 0.0:
        raise ContractViolation("tol must be positive", tol=tol)
    rep = cone_check(v0)
    if not rep.in_cone:
        raise ContractViolation("initial density is not in the cone", **rep.to_dict())
    grid = v0.grid
    f = _Field(grid, params, lambda_scale, fp_tol, form)
    stops = sorted({float(x) for x in (x_eval or []) if 0.0 < x < x_end} | {float(x_end)})
    y = v0.state.copy()
    k1, fp = f(y)
    stations = [_station(0.0, y, fp, grid, params)]
    x = 0.0
    if h0 is None:
        fn = float(np.max(np.abs(k1)))
        h0 = x_end if fn == 0.0 else min(x_end, 0.5 * tol ** 0.2 / fn)
    h = h0
    h_min = 1e-12 * x_end
    if schedule is not None:
        schedule = [float(d) for d in schedule]
        if not schedule or min(schedule) <= 0.0:
            raise ContractViolation("schedule must be a non-empty list of positive steps")
        stops = [float(x) for x in np.cumsum(schedule)]
        stops[-1] = float(x_end)
        h = schedule[0]
    steps_taken = []
    accepted = rejected = 0
    last_failure = ""
    termination = None
    stop_idx = 0
    for _ in range(max_steps):
        target = stops[stop_idx]
        # snap to the stop when a step would end within rounding of it
        hit = schedule is not None or h >= (target - x) * (1.0 - 1e-10)
        step = target - x if hit else h
        try:
            ks = [k1]
            for i in range(1, 7):
                yi = y + step * sum(a * k for a, k in zip(_A[i], ks))
                ki, fpi = f(yi)
                ks.append(ki)
        except (_StageOutsideCone, NotConverged, DegenerateDensity) as exc:
            last_failure = "cone" if isinstance(exc, _StageOutsideCone) else type(exc).__name__
            rejected += 1
            if schedule is not None:
                kind = "ConeExit" if last_failure == "cone" else "StepUnderflow"
                termination = Termination(kind, x, (kind,), f"stage failure: {last_failure}")
                break
            h = 0.5 * step
            if h < h_min:
                kind = "ConeExit" if last_failure == "cone" else "StepUnderflow"
                termination = Termination(kind, x, (kind,), f"stage failure: {last_failure}")
                break
            continue
        y_new = y + step * sum(b * k for b, k in zip(_B5, ks))
        err_vec = step * sum((b5 - b4) * k for b5, b4, k in zip(_B5, _B4, ks))
        err = float(np.max(np.abs(err_vec) / (tol * (1.0 + np.abs(y_new)))))
        if not np.isfinite(err):
            err = np.inf
        fac = 2.0 if err == 0.0 else min(2.0, max(0.5, 0.9 * err ** -0.2))
        if err > 1.0 and schedule is None:
            rejected += 1
            h = step * fac
            if h < h_min:
                termination = Termination("StepUnderflow", x, ("StepUnderflow",),
                                          "error control could not be met")
                break
            continue
        accepted += 1
        steps_taken.append(step)
        x = target if hit else x + step
        y = y_new
        k1 = ks[6]
        fp = fpi
        stations.append(_station(x, y, fp, grid, params))
        if hit:
            stop_idx += 1
        vnew = stations[-1].v
        rep = cone_check(vnew)
        events = []
        if not rep.margin > 0.0:
            events.append("ConeExit")
        if min(float(vnew.values.min()), vnew.tail_minus, vnew.tail_plus) < -tol:
            events.append("Negativity")
        if events:
            termination = Termination(events[0], x, tuple(events), "event at accepted step")
            break
        if stop_idx >= len(stops):
            termination = Termination("Completed", x, (), "")
            break
        if schedule is not None:
            h = schedule[stop_idx]
            continue
        h = max(step * fac, h) if hit else step * fac
        if h < h_min:
            termination = Termination("StepUnderflow", x, ("StepUnderflow",), "step too small")
            break
    else:
        termination = Termination("StepUnderflow", x, ("StepUnderflow",), "max_steps reached")
    stats = {"accepted": accepted, "rejected": rejected, "rhs_evaluations": f.evaluations,
             "fp_iterations": f.fp_iterations, "steps": steps_taken}
    return Profile(stations=stations, termination=termination, stats=stats)
