"""Quantum-walk search on the two-dimensional torus.

Modules: :mod:`qwgrid.grid` (geometry and state), :mod:`qwgrid.walk`
(step kernel), :mod:`qwgrid.search` (search pipeline and statistics),
:mod:`qwgrid.spectral` (eigenvectors and final-state prediction),
:mod:`qwgrid.analytic` (lattice sums), :mod:`qwgrid.cli`.
"""

from qwgrid.errors import DegeneratePairError, PoleError, ResourceLimitError, UsageError
from qwgrid.grid import (
    Direction,
    GridGeometry,
    MarkedSet,
    WalkState,
    basis_state,
    overlap,
    site_probability,
    torus_l1_distance,
    torus_linf_distance,
    uniform_state,
    wrap,
)
from qwgrid.search import RadiusRule, Strategy, distance_profile, neighborhood_probability, run_search
from qwgrid.walk import grover_coin, run, step

__version__ = "0.1.0"
