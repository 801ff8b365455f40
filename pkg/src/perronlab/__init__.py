"""Discrete Dirichlet-principle lab: dyadic exhaustion, nested minimizers and a
walk-on-spheres harmonic-measure oracle on closed-form 2D domains."""

from .domain import BoundaryData, Domain, builtin_data, builtin_domain, hadamard_partial_sum
from .exhaust import CellSet, GridSpec, NodeMask, build_cellset, make_grid, node_masks
from .fdsolve import ScalarField, SolveReport, energy, h1_distance, sample_phi, solve_dirichlet
from .wos import WosConfig, WosEstimate, wos_estimate, wos_grid

__version__ = "0.1.0"
