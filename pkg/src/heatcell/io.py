"""Atomic, deterministic file output: CSV (17 significant digits, LF) and JSON."""
from __future__ import annotations

import csv
import io as _io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError
from .grid import GriddedDensity, HalfDensity, MomentumGrid

ARTIFACT = "heatcell"


def fmt(x) -> str:
    """Shortest text that round-trips a double: 17 significant digits."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def atomic_write(path, data) -> Path:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    raw = data.encode("utf-8") if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(raw)
            fh.flush()
            os.fsync(fh.fileno())
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else fmt(x)
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, payload: dict, config: dict | None = None) -> Path:
    """JSON artifact carrying the artifact name, version and resolved config."""
    doc = {"artifact": ARTIFACT, "version": __version__}
    if config is not None:
        doc["config"] = config
    doc.update(payload)
    return atomic_write(path, dumps(doc))


def csv_text(header, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def write_csv(path, header, rows) -> Path:
    return atomic_write(path, csv_text(header, rows))


def read_csv(path) -> tuple[list, list]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"file not found: {path}", field="path", path=str(path))
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ConfigError(f"empty CSV: {path}", path=str(path))
    return rows[0], rows[1:]


# GriddedDensity round trip: weighted values, tails as rows at p = -inf / inf

def write_density(path, d: GriddedDensity) -> tuple[Path, Path]:
    rows = [(float(p), float(v)) for p, v in zip(d.grid.nodes, d.values)]
    rows += [(-math.inf, d.tail_minus), (math.inf, d.tail_plus)]
    csv_path = write_csv(path, ["p", "value"], rows)
    side = Path(path).with_suffix(".json")
    atomic_write(side, dumps({"nu": d.nu, "p_max": d.grid.p_max, "n": int(d.grid.n),
                              "form": "weighted"}))
    return csv_path, side


def read_density(path) -> GriddedDensity:
    side = Path(path).with_suffix(".json")
    if not side.exists():
        raise ConfigError(f"density sidecar missing: {side}", path=str(side))
    meta = json.loads(side.read_text())
    grid = MomentumGrid(p_max=float(meta["p_max"]), n=int(meta["n"]))
    header, rows = read_csv(path)
    if header != ["p", "value"]:
        raise ConfigError("density CSV header must be p,value", path=str(path))
    body = [(float(a), float(b)) for a, b in rows]
    tm = [b for a, b in body if a == -math.inf]
    tp = [b for a, b in body if a == math.inf]
    vals = [b for a, b in body if math.isfinite(a)]
    if len(tm) != 1 or len(tp) != 1:
        raise ConfigError("density CSV needs one row each for p = -inf and p = inf",
                          path=str(path))
    return GriddedDensity(grid, np.array(vals), tm[0], tp[0], float(meta["nu"]))


def read_half_F(path, grid: MomentumGrid, sign: int, tail: float = 0.0) -> HalfDensity:
    """Half-density given in F-units as CSV ``p,F`` on the nodes of one sign of ``grid``."""
    header, rows = read_csv(path)
    if [h.strip() for h in header][:2] != ["p", "F"]:
        raise ConfigError("half-density CSV header must be p,F", path=str(path))
    p = np.array([float(r[0]) for r in rows])
    F = np.array([float(r[1]) for r in rows])
    nodes = grid.nodes[grid.n // 2:] if sign > 0 else grid.nodes[:grid.n // 2]
    if p.shape != nodes.shape or not np.allclose(p, nodes, rtol=0, atol=1e-12):
        raise ConfigError("half-density nodes do not match the grid", path=str(path),
                          expected=int(nodes.size), got=int(p.size))
    return HalfDensity.from_F(grid, sign, F, tail)
