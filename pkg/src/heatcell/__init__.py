"""Kinetic scatterer model of heat conduction: fixed points, spatial flow, BVP and chain."""
__version__ = "0.1.0"

from .grid import (ConeReport, GriddedDensity, HalfDensity, ModelParams, MomentumGrid,
                   cone_check, norm_G1_F1, sample, total_variation, weighted_integral)
from .kernels import BACKEND

__all__ = [
    "BACKEND", "ConeReport", "GriddedDensity", "HalfDensity", "ModelParams", "MomentumGrid",
    "cone_check", "norm_G1_F1", "sample", "total_variation", "weighted_integral",
    "__version__",
]
