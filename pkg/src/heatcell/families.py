"""Builtin particle densities (weighted form, nu = 1) used by tests and the CLI."""
from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError
from .grid import GriddedDensity, MomentumGrid


def cone_family(grid: MomentumGrid, sigma: float = 0.9, eps: float = 5.0 / 9.0) -> GriddedDensity:
    """``sigma (1 + eps exp(-p^2))``; inside the cone iff sigma/(1 + eps/sqrt2) < 1."""
    return GriddedDensity.from_function(grid, lambda p: sigma * (1.0 + eps * np.exp(-p ** 2)),
                                        tails=(sigma, sigma))


def equilibrium(grid: MomentumGrid, tail: float = 0.99) -> GriddedDensity:
    """v = 1 at the nodes with both limits set to ``tail`` (1 is the cone boundary)."""
    return GriddedDensity(grid, np.ones(grid.n), tail, tail, 1.0)


def drifted(grid: MomentumGrid, c: float = 0.2) -> GriddedDensity:
    """``exp(2 c p - c^2)``, the weighted drifted Maxwellian.

    Its limits are 0 and infinity; both are stored as 0, which only changes
    the representation beyond p_max where the weight is below exp(-p_max^2).
    """
    return GriddedDensity(grid, np.exp(2.0 * c * grid.nodes - c * c), 0.0, 0.0, 1.0)


def one_sided(grid: MomentumGrid) -> GriddedDensity:
    """Particles from the left only: v = 1 for p > 0, 0 for p < 0."""
    return GriddedDensity(grid, (grid.nodes > 0.0).astype(float), 0.0, 1.0, 1.0)


def jump_family(grid: MomentumGrid) -> GriddedDensity:
    """A cone density with a jump at p = 0."""
    return GriddedDensity.from_function(
        grid, lambda p: 0.9 + 0.5 * np.exp(-(p - 0.3) ** 2) + 0.1 * (p > 0) * np.exp(-p ** 2 / 2),
        tails=(0.9, 0.9))


def maxwellian(grid: MomentumGrid, beta: float = 2.0, drift: float = 0.0,
               amplitude: float = 1.0, m: float = 1.0) -> GriddedDensity:
    """Full-line flux Maxwellian ``amplitude exp(-beta (p - m a)^2/(2m))`` in weighted form."""
    p = grid.nodes
    logv = p * p - beta * (p - m * drift) ** 2 / (2.0 * m)
    k = 1.0 - beta / (2.0 * m)
    tail = amplitude if (k == 0.0 and drift == 0.0) else 0.0
    return GriddedDensity(grid, amplitude * np.exp(logv), tail, tail, 1.0)


def random_cone_density(grid: MomentumGrid, rng: np.random.Generator,
                        margin: float = 0.2, bumps: int = 3) -> GriddedDensity:
    """Positive smooth density with cone margin at least ``margin``."""
    p = grid.nodes
    bump = np.zeros_like(p)
    for _ in range(bumps):
        c = rng.uniform(-2.0, 2.0)
        w = rng.uniform(0.3, 1.5)
        bump = bump + rng.uniform(0.1, 1.0) * np.exp(-((p - c) / w) ** 2)
    B = float(np.sum(np.exp(-p * p) * bump) * grid.h)
    # Z tail = sqrt(pi) t / (sqrt(pi) t + B) <= 1 - margin
    t_max = (1.0 - margin) * B / (math.sqrt(math.pi) * margin)
    tail = rng.uniform(0.3, 1.0) * t_max
    return GriddedDensity(grid, tail + bump, tail, tail, 1.0)


BUILTINS = {
    "cone": cone_family,
    "equilibrium": equilibrium,
    "drifted": drifted,
    "one_sided": one_sided,
    "jump": jump_family,
    "maxwellian": maxwellian,
}


def builtin_density(name: str, grid: MomentumGrid, **kwargs) -> GriddedDensity:
    try:
        make = BUILTINS[name]
    except KeyError:
        raise ConfigError(f"unknown builtin density {name!r}", field="density.family",
                          allowed=sorted(BUILTINS)) from None
    try:
        return make(grid, **kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for density {name!r}: {exc}",
                          field="density.params") from None
