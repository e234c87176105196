"""Prelimit directed landscape from Brownian last passage percolation.

Modules
-------
grid        grids, extended values, keyed RNG, Brownian line ensembles
lpp         last passage values, geodesics, brute-force oracle
landscape   coupled prelimit landscape slices and the Airy sheet
semigroup   KPZ fixed point evolution, comparison and sandwich checks
stats       estimators used by the experiment scenarios
lab         configuration, scenarios, reports and the CLI
"""

from ._kernels import BACKEND
from .errors import ConfigError, LabError
from .grid import (
    ExtendedValue,
    Grid,
    GridFunction,
    LineEnsemble,
    RngKey,
    Tag,
    make_grid,
    sample_line_ensemble,
    sample_two_sided_bm,
    window_grid,
)
from .landscape import (
    LandscapeSlice,
    ScalingParams,
    airy_sheet,
    coupled_slices,
    sample_landscape_slice,
)
from .lpp import LppEndpoint, geodesic, last_passage
from .semigroup import Kind, evolve, evolve_on, make_initial

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ConfigError", "LabError", "ExtendedValue", "Grid", "GridFunction",
    "LineEnsemble", "RngKey", "Tag", "make_grid", "sample_line_ensemble",
    "sample_two_sided_bm", "window_grid", "LandscapeSlice", "ScalingParams", "airy_sheet",
    "coupled_slices", "sample_landscape_slice", "LppEndpoint", "geodesic", "last_passage",
    "Kind", "evolve", "evolve_on", "make_initial",
]
