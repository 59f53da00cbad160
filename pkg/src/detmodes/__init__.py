"""Determining modes and nodes for the 2D Navier-Stokes equations on a torus."""

__version__ = "0.1.0"

from .constants import AgmonResult, compute_agmon_constant, constants_table, tabulate_bound_constants
from .inequalities import InequalityCase, ViolationReport, check_inequality, run_campaign, sample_field
from .lattice import LatticeSpectrum, TorusGeometry, enumerate_spectrum, verify_eigenvalue_bounds
from .solver import ForcingSpec, SimParams, SpectralGrid, VorticityField, random_field, run, step
from .sync import (CouplingSpec, SyncResult, find_empirical_threshold, gronwall_check, node_observation,
                   project_low_modes, run_sync)
from .thresholds import (ThresholdReport, attractor_dimension_bound, modes_damped, modes_dirichlet,
                         modes_periodic, nodes_damped, nodes_periodic)

__all__ = [
    "AgmonResult", "CouplingSpec", "ForcingSpec", "InequalityCase", "LatticeSpectrum", "SimParams",
    "SpectralGrid", "SyncResult", "ThresholdReport", "TorusGeometry", "ViolationReport", "VorticityField",
    "attractor_dimension_bound", "check_inequality", "compute_agmon_constant", "constants_table",
    "enumerate_spectrum", "find_empirical_threshold", "gronwall_check", "modes_damped", "modes_dirichlet",
    "modes_periodic", "node_observation", "nodes_damped", "nodes_periodic", "project_low_modes",
    "random_field", "run", "run_campaign", "run_sync", "sample_field", "step", "tabulate_bound_constants",
    "verify_eigenvalue_bounds",
]
