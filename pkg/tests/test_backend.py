import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from heatcell import _kernels_numba as nb_k
from heatcell import _kernels_numpy as np_k
from heatcell._lagrange import CORR
from heatcell.families import cone_family, jump_family
from heatcell.grid import MomentumGrid, jump_polynomial
from heatcell.kernels import refinement
from heatcell.scatterer import WIDTH, fixed_point, scatterer_grid


def _state(n_u):
    # smooth, and consistent with its tails; the backends split the weight of
    # the last interval between edge node and tail column differently
    x = np.linspace(-1.0, 1.0, n_u)
    return np.concatenate([0.1 + np.exp(-(6.0 * x) ** 2), [0.1, 0.1]])


@pytest.mark.parametrize("which", ["kv", "gain"])
def test_lattice_matrices_agree(params, which):
    g = MomentumGrid(n=120)
    ug = scatterer_grid(g, params)
    v = jump_family(g).values
    d = jump_polynomial(v)
    rho = params.rho
    if which == "kv":
        args = (v, 0.9, 0.9, CORR, d, np.ascontiguousarray(ug.nodes), ug.n, g.h,
                refinement((1 + rho) / rho), 1 - rho, rho, (1 + rho) / rho, 1 / rho,
                -(1 + rho) / rho, WIDTH)
    else:
        args = (v, 0.9, 0.9, CORR, d, np.ascontiguousarray(g.nodes), ug.n, g.h,
                refinement(rho / (1 - rho)), -rho, math.sqrt(1 - rho * rho), 1 / (1 - rho),
                1 / (1 - rho), rho / (1 - rho), WIDTH)
    a = nb_k.lattice_matrix(*args) @ _state(ug.n)
    b = np_k.lattice_matrix(*args) @ _state(ug.n)
    assert np.max(np.abs(a - b)) < 1e-10


def test_sample_many_agrees():
    g = MomentumGrid(n=120)
    v = jump_family(g).values
    xs = np.linspace(-7.0, 7.0, 501)
    for split in (True, False):
        np.testing.assert_allclose(nb_k.sample_many(v, 0.9, 0.9, g.h, xs, split),
                                   np_k.sample_many(v, 0.9, 0.9, g.h, xs, split), atol=1e-13)


def test_numpy_backend_end_to_end(params):
    code = ("import json; from heatcell import BACKEND; from heatcell.grid import *; "
            "from heatcell.families import cone_family; from heatcell.scatterer import fixed_point; "
            "u = fixed_point(cone_family(MomentumGrid(n=64)), ModelParams()).u; "
            "print(json.dumps([BACKEND, u.values.tolist()]))")
    env = {**os.environ, "HEATCELL_BACKEND": "numpy"}
    r = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env,
                       check=True)
    backend, vals = json.loads(r.stdout)
    assert backend == "numpy"
    u = fixed_point(cone_family(MomentumGrid(n=64)), params).u
    assert np.max(np.abs(np.array(vals) - u.values)) < 1e-10


def test_bad_backend_name():
    env = {**os.environ, "HEATCELL_BACKEND": "fortran"}
    r = subprocess.run([sys.executable, "-c", "import heatcell"], capture_output=True,
                       text=True, env=env)
    assert r.returncode != 0 and "HEATCELL_BACKEND" in r.stderr
