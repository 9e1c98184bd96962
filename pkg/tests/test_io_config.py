import json
import math
import os

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from heatcell import __version__
from heatcell.config import DEFAULTS, OUTPUT_ENV, load_config, parse_override
from heatcell.errors import ConfigError
from heatcell.families import jump_family
from heatcell.grid import MomentumGrid
from heatcell.io import (atomic_write, csv_text, fmt, read_csv, read_density, read_half_F,
                         write_csv, write_density, write_json)


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_round_trips(x):
    assert float(fmt(x)) == x


def test_fmt_special_values():
    assert fmt(math.inf) == "inf" and fmt(-math.inf) == "-inf" and fmt(math.nan) == "nan"
    assert fmt(0.1) == "0.10000000000000001"


def test_csv_lf_and_precision(tmp_path):
    text = csv_text(["a", "b"], [(1.0 / 3.0, 2)])
    assert "\r" not in text
    assert text == "a,b\n0.33333333333333331,2\n"
    p = write_csv(tmp_path / "x.csv", ["a"], [(0.5,)])
    assert p.read_bytes() == b"a\n0.5\n"


def test_atomic_write_leaves_no_temp(tmp_path):
    target = tmp_path / "sub" / "out.txt"
    atomic_write(target, "one")
    atomic_write(target, "two")
    assert target.read_text() == "two"
    assert sorted(os.listdir(target.parent)) == ["out.txt"]
    assert oct(target.stat().st_mode & 0o777) == "0o644"


def test_json_embeds_version_and_config(tmp_path):
    p = write_json(tmp_path / "r.json", {"value": np.float64(1.5), "arr": np.arange(2),
                                         "bad": math.inf}, config={"k": 1})
    doc = json.loads(p.read_text())
    assert doc["version"] == __version__
    assert doc["config"] == {"k": 1}
    assert doc["value"] == 1.5 and doc["arr"] == [0, 1] and doc["bad"] == "inf"


def test_density_round_trip(tmp_path, grid):
    d = jump_family(grid)
    write_density(tmp_path / "d.csv", d)
    back = read_density(tmp_path / "d.csv")
    np.testing.assert_array_equal(back.values, d.values)
    assert back.grid == d.grid and back.nu == d.nu
    assert (back.tail_minus, back.tail_plus) == (d.tail_minus, d.tail_plus)


def test_half_F_reader(tmp_path):
    g = MomentumGrid(n=64)
    nodes = g.nodes[32:]
    write_csv(tmp_path / "h.csv", ["p", "F"], [(p, math.exp(-p * p)) for p in nodes])
    half = read_half_F(tmp_path / "h.csv", g, 1)
    np.testing.assert_allclose(half.values, 1.0, rtol=1e-13)
    with pytest.raises(ConfigError):
        read_half_F(tmp_path / "h.csv", g, -1)
    with pytest.raises(ConfigError):
        read_csv(tmp_path / "missing.csv")


def test_defaults_load(monkeypatch):
    monkeypatch.delenv(OUTPUT_ENV, raising=False)
    cfg = load_config()
    assert cfg == DEFAULTS


def test_precedence_file_env_set_flags(tmp_path, monkeypatch):
    f = tmp_path / "c.yaml"
    f.write_text("grid:\n  n: 120\n  p_max: 7.0\noutput:\n  directory: from-file\nseed: 3\n")
    monkeypatch.delenv(OUTPUT_ENV, raising=False)
    cfg = load_config(f)
    assert cfg["grid"] == {"n": 120, "p_max": 7.0}
    assert cfg["output"]["directory"] == "from-file"
    monkeypatch.setenv(OUTPUT_ENV, "from-env")
    cfg = load_config(f, overrides=["seed=5"])
    assert cfg["output"]["directory"] == "from-env"
    assert cfg["seed"] == 5
    cfg = load_config(f, overrides=["grid.n=64"], flags={"grid.n": 80, "output.directory": "x",
                                                          "seed": None})
    assert cfg["grid"]["n"] == 80
    assert cfg["output"]["directory"] == "x"
    assert cfg["seed"] == 3


@pytest.mark.parametrize("bad,field", [
    ("grid.n=121", "grid.n"), ("grid.n=16", "grid.n"), ("gird.n=4", "gird"),
    ("relax.cfl=1.5", "relax.cfl"), ("evolve.form=xyz", "evolve.form"),
    ("density.tails=[1]", "density.tails"), ("output.formats=[pdf]", "output.formats"),
    ("seed=1.5", "seed"), ("model.M=0.5", None),
])
def test_config_errors_name_field(bad, field):
    with pytest.raises(ConfigError) as exc:
        load_config(overrides=[bad])
    if field is not None:
        assert exc.value.details["field"] == field


def test_config_file_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.yaml")
    (tmp_path / "bad.yaml").write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.yaml")


def test_density_params_are_free_form():
    cfg = load_config(overrides=["density.family=drifted", "density.params={c: 0.3}"])
    assert cfg["density"]["params"] == {"c": 0.3}
    assert parse_override("a.b=[1, 2]") == {"a": {"b": [1, 2]}}
    with pytest.raises(ConfigError):
        parse_override("novalue")
