"""Time the quadrature kernels on both backends and check that they agree.

Usage: python benchmarks/bench_kernels.py [--n 240] [--repeat 20]
"""
import argparse
import math
import time

import numpy as np

from heatcell import _kernels_numba as nb_k
from heatcell import _kernels_numpy as np_k
from heatcell._lagrange import CORR
from heatcell.grid import ModelParams, MomentumGrid, jump_polynomial
from heatcell.kernels import refinement
from heatcell.scatterer import WIDTH, scatterer_grid


def _cases(n):
    params = ModelParams()
    rho, mu = params.rho, params.mu
    grid = MomentumGrid(n=n)
    ug = scatterer_grid(grid, params)
    p = grid.nodes
    v = 0.9 + 0.5 * np.exp(-(p - 0.3) ** 2) + 0.1 * (p > 0) * np.exp(-p * p / 2)
    d = jump_polynomial(v)
    u = 0.1 + np.exp(-(ug.nodes - 0.2) ** 2)
    h = grid.h
    kv = (v, 0.9, 0.9, CORR, d, ug.nodes, ug.n, h, refinement((1 + rho) / rho), 1 - rho, rho,
          (1 + rho) / rho, 1 / rho, -(1 + rho) / rho, WIDTH)
    gain = (v, 0.9, 0.9, CORR, d, p, ug.n, h, refinement(rho / (1 - rho)), -rho,
            math.sqrt(1 - rho * rho), 1 / (1 - rho), 1 / (1 - rho), rho / (1 - rho), WIDTH)
    champ = (v, 0.9, 0.9, u, 0.1, 0.1, CORR, d, p, h, rho, mu, WIDTH)
    xs = np.linspace(-7.0, 7.0, 4001)
    sample = (v, 0.9, 0.9, h, xs, True)
    return {"kv_matrix": ("lattice_matrix", kv), "gain_matrix": ("lattice_matrix", gain),
            "gain_champ": ("gain_champ", champ), "sample_many": ("sample_many", sample)}


def _time(fn, args, repeat):
    fn(*args)  # compile / warm up
    t0 = time.perf_counter()
    for _ in range(repeat):
        out = fn(*args)
    return (time.perf_counter() - t0) / repeat, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=240)
    ap.add_argument("--repeat", type=int, default=20)
    a = ap.parse_args(argv)
    print(f"{'kernel':<12} {'numba ms':>10} {'numpy ms':>10} {'speed-up':>9} {'max diff':>10}")
    for name, (fn, args) in _cases(a.n).items():
        t_nb, r_nb = _time(getattr(nb_k, fn), args, a.repeat)
        t_np, r_np = _time(getattr(np_k, fn), args, max(1, a.repeat // 10))
        if fn == "lattice_matrix":
            # entries near the grid ends may split weight between the last
            # node and the tail column differently; compare the applied operator
            n_u = args[6]
            x = np.linspace(-1.0, 1.0, n_u)
            state = np.concatenate([0.1 + np.exp(-(6.0 * x) ** 2), [0.1, 0.1]])
            r_nb, r_np = r_nb @ state, r_np @ state
        diff = float(np.max(np.abs(np.asarray(r_nb) - np.asarray(r_np))))
        print(f"{name:<12} {1e3 * t_nb:10.3f} {1e3 * t_np:10.3f} {t_np / t_nb:9.1f} {diff:10.2e}")


if __name__ == "__main__":
    main()
