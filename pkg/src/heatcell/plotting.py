"""Static SVG line charts. Output is deterministic for identical input."""
from __future__ import annotations

import io as _io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .io import atomic_write  # noqa: E402

FLUX_BAND = 1e-6

_RC = {"svg.hashsalt": "heatcell", "svg.fonttype": "none", "figure.figsize": (6.4, 4.0),
       "axes.grid": True, "grid.alpha": 0.3}


def _save(fig, path):
    buf = _io.BytesIO()
    fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return atomic_write(path, buf.getvalue())


def _pick(n: int, k: int) -> list[int]:
    if n <= k:
        return list(range(n))
    return sorted({int(round(i)) for i in np.linspace(0, n - 1, k)})


def plot_stations(profile, path, k: int = 5, physical: bool = True):
    """Overlays of F(., x) (or the weighted v) at up to ``k`` stations."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        for j in _pick(len(profile.stations), k):
            s = profile.stations[j]
            y = s.v.physical() if physical else s.v.values
            ax.plot(s.v.grid.nodes, y, lw=1.2, label=f"x = {s.x:.4g}")
        ax.set_xlabel("p")
        ax.set_ylabel("F(p, x)" if physical else "v(p, x)")
        ax.legend(fontsize=8)
        return _save(fig, path)


def plot_fluxes(profile, path, band: float = FLUX_BAND, xlabel: str = "x", xs=None):
    """Flux components against x, each relative to its value at the first station."""
    rows = [s.fluxes.as_array() for s in profile.stations]
    if xs is None:
        xs = profile.xs
    F = np.array(rows)
    f0 = F[0]
    scale = np.maximum(np.abs(f0), 1.0)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        for i, name in enumerate(("particle", "momentum", "energy")):
            ax.plot(xs, (F[:, i] - f0[i]) / scale[i], marker=".", lw=1.0, label=name)
        ax.axhspan(-band, band, color="0.85", zorder=0, label=f"+-{band:g}")
        ax.set_xlabel(xlabel)
        ax.set_ylabel("relative flux change")
        ax.legend(fontsize=8)
        return _save(fig, path)


def plot_scatterer(profile, path):
    """Scatterer density g(P) at the first and last station."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        for s in (profile.stations[0], profile.stations[-1]):
            ax.plot(s.u.grid.nodes, s.u.physical(), lw=1.2, label=f"x = {s.x:.4g}")
        ax.set_xlabel("P")
        ax.set_ylabel("g(P)")
        ax.legend(fontsize=8)
        return _save(fig, path)


def plot_chain_vs_continuum(cells, profile, report: dict, path, node: int | None = None):
    """Chain incoming flux per cell against the continuum at one momentum node."""
    grid = cells[0].F_in_left.grid
    j = grid.n // 2 + grid.n // 8 if node is None else node
    N = len(cells)
    xc = (np.arange(N) + 0.5) / N
    chain = [c.incoming.physical()[j] for c in cells]
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.plot(profile.xs, [s.v.physical()[j] for s in profile.stations], lw=1.2,
                label="continuum")
        ax.plot(xc, chain, "o", ms=3,
                label=f"chain N = {N}, sup error {report['sup_error']:.3e}")
        ax.set_xlabel("x")
        ax.set_ylabel(f"F(p = {grid.nodes[j]:.4g}, x)")
        ax.legend(fontsize=8)
        return _save(fig, path)
