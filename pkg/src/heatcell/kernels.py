"""Dispatch to the numba or numpy kernel set (see ``_backend``).

Also holds the two operator geometries built on ``lattice_matrix``.
"""
import math

from ._backend import BACKEND
from ._lagrange import CORR

if BACKEND == "numba":
    from ._kernels_numba import gain_champ, lattice_matrix, sample_many
else:
    from ._kernels_numpy import gain_champ, lattice_matrix, sample_many


def refinement(stride: float) -> int:
    """Sub-lattice factor keeping a u-sample stride of ``stride * h`` at most h."""
    return max(1, int(math.ceil(stride - 1e-9)))


def kv_matrix(v, vlo, vhi, dpoly, out_p, n_u, h, rho, width):
    """``(1+rho)/rho * int v(s) exp(-((s-(1-rho)p)/rho)^2) u((p-(1+rho)s)/rho) ds``."""
    return lattice_matrix(v, vlo, vhi, CORR, dpoly, out_p, n_u, h,
                          refinement((1.0 + rho) / rho), 1.0 - rho, rho, (1.0 + rho) / rho,
                          1.0 / rho, -(1.0 + rho) / rho, width)


def gain_matrix(v, vlo, vhi, dpoly, out_p, n_u, h, rho, width):
    """``1/(1-rho) * int v(s) exp(-(s+rho p)^2/(1-rho^2)) u((rho s + p)/(1-rho)) ds``."""
    return lattice_matrix(v, vlo, vhi, CORR, dpoly, out_p, n_u, h,
                          refinement(rho / (1.0 - rho)), -rho, math.sqrt(1.0 - rho * rho),
                          1.0 / (1.0 - rho), 1.0 / (1.0 - rho), rho / (1.0 - rho), width)


__all__ = ["BACKEND", "gain_champ", "gain_matrix", "kv_matrix", "lattice_matrix",
           "refinement", "sample_many"]
