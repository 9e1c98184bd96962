"""Command-line front end: ``heatcell <subcommand> [options]``.

Exit codes: 0 success, 2 contract violation, 3 non-convergence, 4 configuration
error, 1 unexpected internal error. Errors are written to stderr as one JSON
record. Momentum functions are read and written in F-units.
"""
from __future__ import annotations

import argparse
import copy
import json
import sys
import traceback
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, checks, io
from .bvp import BoundaryData, relax_oracle, solve_bvp
from .chain import ChainParams, MaxwellianSpec, compare_to_continuum, solve_chain
from .config import _merge, load_config, model_params, momentum_grid, parse_override, validate
from .errors import (ConfigError, ContractViolation, EvolveTerminatedEarly, HeatcellError,
                     NotConverged)
from .families import builtin_density
from .grid import GriddedDensity, cone_check, sample, weighted_integral
from .scatterer import fixed_point
from .transport import drifted_maxwellian_fluxes, evolve, flux_drift, fluxes

SUBCOMMANDS = ("fixed-point", "evolve", "fluxes", "bvp", "relax", "chain", "verify", "sweep")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"command line: {message}", field="argv")


# ---------------------------------------------------------------------------
# inputs

def load_density(cfg: dict, grid) -> GriddedDensity:
    """Full-line particle density from a builtin family or a ``p,F`` CSV."""
    d = cfg["density"]
    if d["csv"] is not None:
        header, rows = io.read_csv(d["csv"])
        if [h.strip() for h in header][:2] != ["p", "F"]:
            raise ConfigError("density CSV header must be p,F", field="density.csv")
        p = np.array([float(r[0]) for r in rows])
        F = np.array([float(r[1]) for r in rows])
        if p.shape != grid.nodes.shape or not np.allclose(p, grid.nodes, rtol=0, atol=1e-12):
            raise ConfigError("density CSV nodes do not match the grid", field="density.csv",
                              expected=int(grid.n), got=int(p.size))
        lo, hi = (float(t) for t in d["tails"])
        return GriddedDensity(grid, np.exp(grid.nodes ** 2) * F, lo, hi, 1.0)
    kw = dict(d["params"])
    if d["family"] == "maxwellian":
        kw.setdefault("m", float(cfg["model"]["m"]))
    return builtin_density(d["family"], grid, **kw)


def _perturbation(spec):
    a = float(spec["amplitude"])
    if a == 0.0:
        return None
    c, w = float(spec["centre"]), float(spec["width"])
    return lambda p: 1.0 + a * np.exp(-((p - c) / w) ** 2)


def boundary_half(cfg: dict, side: str, grid, params):
    spec = cfg["boundary"][side]
    sign = 1 if side == "left" else -1
    if spec["csv"] is not None:
        return io.read_half_F(spec["csv"], grid, sign, float(spec["tail"]))
    if spec["family"] != "maxwellian":
        raise ConfigError("boundary family must be maxwellian (or give csv)",
                          field=f"boundary.{side}.family")
    ms = MaxwellianSpec(float(spec["beta"]), float(spec["drift"]), float(spec["amplitude"]))
    return ms.half(grid, sign, params.m, float(spec["tail"]), _perturbation(spec["perturbation"]))


def boundary_data(cfg: dict, grid, params) -> BoundaryData:
    left = boundary_half(cfg, "left", grid, params)
    right = boundary_half(cfg, "right", grid, params)
    b = cfg["boundary"]
    builtin = b["left"]["csv"] is None and b["right"]["csv"] is None
    unsupported = builtin and float(b["left"]["beta"]) != float(b["right"]["beta"])
    return BoundaryData(left, right, unsupported_regime=unsupported)


# ---------------------------------------------------------------------------
# outputs

class Outputs:
    def __init__(self, cfg: dict):
        self.dir = Path(cfg["output"]["directory"])
        self.formats = set(cfg["output"]["formats"])
        self.cfg = cfg
        self.written: list[str] = []

    def json(self, name, payload):
        if "json" in self.formats:
            self.written.append(str(io.write_json(self.dir / name, payload, self.cfg)))

    def csv(self, name, header, rows):
        if "csv" in self.formats:
            self.written.append(str(io.write_csv(self.dir / name, header, rows)))

    def svg(self, name, fn, *args, **kw):
        if "svg" in self.formats:
            from . import plotting
            self.written.append(str(getattr(plotting, fn)(*args, path=self.dir / name, **kw)))


def profile_rows(profile):
    """Long format: one row per (station, node) with F, g and the weighted forms."""
    rows = []
    for s in profile.stations:
        p = s.v.grid.nodes
        F = s.v.physical()
        u = np.asarray(sample(s.u, p))
        g = np.exp(-s.u.nu * p * p) * u
        for j in range(p.size):
            rows.append((float(s.x), float(p[j]), float(F[j]), float(g[j]), float(s.v.values[j]),
                         float(u[j])))
    return rows


PROFILE_HEADER = ["x", "p", "F", "g", "v", "u"]


def write_profile(out: Outputs, profile, stem: str, k_plot: int = 5):
    out.csv(f"{stem}.csv", PROFILE_HEADER, profile_rows(profile))
    if len(profile.stations) >= 1:
        out.svg(f"{stem}_stations.svg", "plot_stations", profile, k=k_plot)
        out.svg(f"{stem}_fluxes.svg", "plot_fluxes", profile)
        out.svg(f"{stem}_scatterer.svg", "plot_scatterer", profile)


def _half_rows(half):
    return [(float(p), float(F)) for p, F in zip(half.nodes, half.F)]


# ---------------------------------------------------------------------------
# subcommands; each returns the exit status and may raise HeatcellError

def cmd_fixed_point(cfg, out: Outputs) -> int:
    params, grid = model_params(cfg), momentum_grid(cfg)
    v = load_density(cfg, grid)
    fp = fixed_point(v, params, tol=float(cfg["fixed_point"]["tol"]),
                     max_iter=int(cfg["fixed_point"]["max_iter"]))
    u = fp.u
    out.csv("fixed_point.csv", ["P", "g", "u"],
            [(float(P), float(g), float(x)) for P, g, x in zip(u.grid.nodes, u.physical(),
                                                          u.values)])
    out.json("fixed_point.json", {"diagnostics": fp.diagnostics(), "cone": cone_check(v).to_dict(),
                                  "u_tails": [u.tail_minus, u.tail_plus],
                                  "C": weighted_integral(u, 0), "u_grid": u.grid.to_dict()})
    return 0


def cmd_evolve(cfg, out: Outputs) -> int:
    params, grid = model_params(cfg), momentum_grid(cfg)
    e = cfg["evolve"]
    v0 = load_density(cfg, grid)
    prof = evolve(v0, float(e["x_end"]), float(e["tol"]), params,
                  lambda_scale=float(cfg["lambda_scale"]), fp_tol=float(cfg["fixed_point"]["tol"]),
                  form=e["form"])
    write_profile(out, prof, "profile", int(e["stations_plotted"]))
    stats = {k: v for k, v in prof.stats.items()}
    out.json("evolve.json", {"termination": prof.termination.to_dict(),
                             "x_reached": prof.termination.x, "flux_drift": flux_drift(prof),
                             "flux_table": prof.flux_table(), "stats": stats})
    if not prof.completed and e["require_completion"]:
        t = prof.termination
        raise EvolveTerminatedEarly(f"evolve stopped early: {t.kind} at x = {t.x:.6g}",
                                    termination=None, kind=t.kind, x=t.x)
    return 0


def cmd_fluxes(cfg, out: Outputs) -> int:
    params, grid = model_params(cfg), momentum_grid(cfg)
    v = load_density(cfg, grid)
    fx = fluxes(v, params)
    payload = {"fluxes": fx.to_dict(), "cone": cone_check(v).to_dict()}
    d = cfg["density"]
    closed = None
    if d["csv"] is None and d["family"] == "maxwellian":
        kw = d["params"]
        cf = drifted_maxwellian_fluxes(float(kw.get("beta", 2.0)), float(kw.get("drift", 0.0)),
                                       params.m)
        closed = cf.as_array() * float(kw.get("amplitude", 1.0))
    elif d["csv"] is None and d["family"] == "drifted":
        c = float(d["params"].get("c", 0.2))
        # exp(-(p - c)^2) is the Maxwellian with beta = 2m and drift c/m
        closed = drifted_maxwellian_fluxes(2.0 * params.m, c / params.m, params.m).as_array()
    if closed is not None:
        num = fx.as_array()
        payload["closed_form"] = dict(zip(("phi_P", "phi_M", "phi_E"), closed.tolist()))
        # relative where a component is O(1), absolute where it vanishes
        payload["relative_error"] = float(np.max(np.abs(num - closed)
                                                 / np.maximum(np.abs(closed), 1.0)))
    out.json("fluxes.json", payload)
    return 0


def cmd_bvp(cfg, out: Outputs) -> int:
    params, grid = model_params(cfg), momentum_grid(cfg)
    b = cfg["bvp"]
    bd = boundary_data(cfg, grid, params)
    res = solve_bvp(bd, float(b["x_end"]), float(b["tol"]), params,
                    lambda_scale=float(cfg["lambda_scale"]), evolve_tol=b["evolve_tol"],
                    max_newton=int(b["max_newton"]), workers=int(b["workers"]))
    out.csv("F0_minus.csv", ["p", "F"], _half_rows(res.F0_minus))
    write_profile(out, res.profile, "profile")
    out.json("bvp.json", {**res.summary(), "flux_drift": flux_drift(res.profile),
                          "flux_table": res.profile.flux_table(),
                          "F0_minus_tail": res.F0_minus.tail})
    return 0


def cmd_relax(cfg, out: Outputs) -> int:
    params, grid = model_params(cfg), momentum_grid(cfg)
    r = cfg["relax"]
    bd = boundary_data(cfg, grid, params)
    prof = relax_oracle(bd, float(cfg["bvp"]["x_end"]), float(r["t_end"]), float(r["cfl"]),
                        params, cells=int(r["cells"]), lambda_scale=float(cfg["lambda_scale"]),
                        time_stepping=r["time_stepping"], scatterer_update=r["scatterer_update"],
                        steady_tol=float(r["steady_tol"]))
    write_profile(out, prof, "profile")
    out.json("relax.json", {"termination": prof.termination.to_dict(), "stats": prof.stats,
                            "flux_table": prof.flux_table(),
                            "unsupported_regime": bd.unsupported_regime})
    if not prof.completed:
        raise NotConverged("relaxation did not reach steady state", **prof.stats)
    return 0


def cmd_chain(cfg, out: Outputs) -> int:
    params, grid = model_params(cfg), momentum_grid(cfg)
    c = cfg["chain"]
    bd = boundary_data(cfg, grid, params)
    cp = ChainParams(N=int(c["N"]), b=float(c["b"]), left=bd.F0_plus, right=bd.F1_minus,
                     sweep_tol=float(c["sweep_tol"]), max_sweeps=int(c["max_sweeps"]),
                     omega=float(c["omega"]))
    sol = solve_chain(cp, params)
    N = cp.N
    rows = []
    for i, cell in enumerate(sol.cells, start=1):
        g = cell.g
        fx = fluxes(cell.incoming, params)
        rows.append((i, (i - 0.5) / N, weighted_integral(g, 0), weighted_integral(g, 1),
                     weighted_integral(g, 2), fx.phi_P, fx.phi_M, fx.phi_E))
    out.csv("chain_cells.csv", ["cell", "x", "g_mass", "g_momentum", "g_second_moment",
                                "phi_P", "phi_M", "phi_E"], rows)
    out.csv("chain_interfaces.csv", ["interface", "x", "phi_P", "phi_M", "phi_E"],
            [(k, k / N, f.phi_P, f.phi_M, f.phi_E) for k, f in enumerate(sol.interface_fluxes)])
    flux = np.array([f.as_array() for f in sol.interface_fluxes])
    payload = {"chain": cp.to_dict(), "sweeps": sol.sweeps, "max_change": sol.max_change,
               "interface_flux_spread": (np.max(flux, axis=0) - np.min(flux, axis=0)).tolist(),
               "unsupported_regime": bd.unsupported_regime}
    if c["compare"]:
        centres = [(i - 0.5) / N for i in range(1, N + 1)]
        res = solve_bvp(bd, 1.0, float(cfg["bvp"]["tol"]), params, lambda_scale=cp.b,
                        evolve_tol=cfg["bvp"]["evolve_tol"], max_newton=int(cfg["bvp"]["max_newton"]),
                        workers=int(cfg["bvp"]["workers"]), x_eval=centres)
        rep = compare_to_continuum(sol.cells, res.profile, cp.b)
        payload["comparison"] = rep
        payload["continuum"] = res.summary()
        out.svg("chain_vs_continuum.svg", "plot_chain_vs_continuum", sol.cells, res.profile, rep)
    out.json("chain.json", payload)
    return 0


def cmd_verify(cfg, out: Outputs) -> int:
    params, grid = model_params(cfg), momentum_grid(cfg)
    v = cfg["verify"]
    recs = checks.run_all(params, grid, seed=int(cfg["seed"]), n_samples=int(v["n_samples"]),
                          L2=float(v["L2"]), n_points=int(v["n_points"]))
    ok = all(r["passed"] for r in recs)
    out.json("verify.json", {"records": recs, "all_passed": ok})
    for r in recs:
        print(f"{'PASS' if r['passed'] else 'FAIL'} {r['check']}")
    if not ok:
        raise ContractViolation("verification failed",
                                failed=[r["check"] for r in recs if not r["passed"]])
    return 0


def _run_one(cfg, sub, index, value, base: Path):
    """One sweep member in its own directory; failures are recorded, not raised."""
    run_dir = base / f"run-{index:03d}"
    rcfg = copy.deepcopy(cfg)
    try:
        rcfg = _merge(rcfg, parse_override(f"{cfg['sweep']['key']}={json.dumps(value)}"))
        rcfg["output"]["directory"] = str(run_dir)
        validate(rcfg)
        code = COMMANDS[sub](rcfg, Outputs(rcfg))
        err = None
    except HeatcellError as exc:
        code, err = exc.exit_code, exc.to_record()
        io.write_json(run_dir / "error.json", err, rcfg)
    return {"index": index, "value": value, "exit_code": code, "directory": run_dir.name,
            "error": err}


def cmd_sweep(cfg, out: Outputs) -> int:
    s = cfg["sweep"]
    sub = s["subcommand"]
    if sub not in COMMANDS or sub == "sweep":
        raise ConfigError("sweep.subcommand must name another subcommand",
                          field="sweep.subcommand", value=sub)
    values = list(s["values"])
    if not values:
        raise ConfigError("sweep.values is empty", field="sweep.values")
    with ThreadPoolExecutor(max_workers=max(1, int(s["workers"]))) as ex:
        runs = list(ex.map(lambda a: _run_one(cfg, sub, a[0], a[1], out.dir),
                           enumerate(values)))
    out.json("sweep.json", {"runs": runs})
    worst = max((r["exit_code"] for r in runs), default=0)
    return worst


COMMANDS = {"fixed-point": cmd_fixed_point, "evolve": cmd_evolve, "fluxes": cmd_fluxes,
            "bvp": cmd_bvp, "relax": cmd_relax, "chain": cmd_chain, "verify": cmd_verify,
            "sweep": cmd_sweep}

# per-subcommand options: (flag, config key, type)
_OPTIONS = {
    "evolve": [("--x-end", "evolve.x_end", float), ("--tol", "evolve.tol", float),
               ("--family", "density.family", str), ("--density-csv", "density.csv", str)],
    "fixed-point": [("--family", "density.family", str), ("--density-csv", "density.csv", str)],
    "fluxes": [("--family", "density.family", str), ("--density-csv", "density.csv", str)],
    "bvp": [("--x-end", "bvp.x_end", float), ("--tol", "bvp.tol", float),
            ("--workers", "bvp.workers", int)],
    "relax": [("--x-end", "bvp.x_end", float), ("--cells", "relax.cells", int),
              ("--cfl", "relax.cfl", float), ("--t-end", "relax.t_end", float)],
    "chain": [("--N", "chain.N", int), ("--b", "chain.b", float),
              ("--compare", "chain.compare", None)],
    "verify": [("--n-samples", "verify.n_samples", int)],
    "sweep": [("--workers", "sweep.workers", int)],
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="YAML configuration file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a configuration key (repeatable)")
    common.add_argument("--seed", type=int, help="seed for sampling operations")
    common.add_argument("--grid-n", type=int, help="momentum nodes (even, >= 32)")
    common.add_argument("--p-max", type=float, help="momentum cut-off")
    common.add_argument("--output-dir", help="output directory (beats HEATCELL_OUTPUT_DIR)")
    parser = _Parser(prog="heatcell", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"heatcell {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name, parents=[common])
        for flag, key, typ in _OPTIONS.get(name, []):
            if typ is None:
                sp.add_argument(flag, dest=key, action="store_const", const=True)
            else:
                sp.add_argument(flag, dest=key, type=typ)
    return parser


def resolve(argv=None) -> tuple[str, dict]:
    args = build_parser().parse_args(argv)
    ns = vars(args)
    flags = {"seed": ns.get("seed"), "grid.n": ns.get("grid_n"), "grid.p_max": ns.get("p_max"),
             "output.directory": ns.get("output_dir")}
    for flag, key, _ in _OPTIONS.get(args.subcommand, []):
        flags[key] = ns.get(key)
    cfg = load_config(args.config, overrides=args.set, flags=flags)
    return args.subcommand, cfg


def _emit_error(record: dict, code: int):
    record = {**record, "exit_code": code}
    sys.stderr.write(json.dumps(io._jsonable(record), sort_keys=True) + "\n")


def main(argv=None) -> int:
    try:
        sub, cfg = resolve(argv)
        code = COMMANDS[sub](cfg, Outputs(cfg))
    except HeatcellError as exc:
        _emit_error(exc.to_record(), exc.exit_code)
        return exc.exit_code
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except Exception as exc:  # never a bare crash
        _emit_error({"error": "internal", "message": str(exc),
                     "details": {"type": type(exc).__name__,
                                 "traceback": traceback.format_exc(limit=5)}}, 1)
        return 1
    return code


if __name__ == "__main__":
    sys.exit(main())
