"""Multi-species quantum BGK solver.

Conservative relaxation of fermion, boson and classical mixtures with
entropy-consistent equilibria, first- and second-order IMEX time
integration, and an optional one-dimensional slab transport term.
"""

from .config import SimConfig, SpeciesConfig, parse_config
from .diagnostics import (DiagnosticsCollector, DiagnosticsRecord,
                          SpeciesState, analytic_kinetic_temperature_gap,
                          analytic_velocity_gap, equilibrium_temperature,
                          physical_temperature, spatial_profile,
                          total_entropy)
from .equilibrium import (InterAlpha, IntraAlpha, abc_to_alpha,
                          alpha_to_abc, classical_fit, equilibrium_field,
                          solve_all_pairs, solve_inter, solve_intra)
from .errors import (ConfigurationError, DiagnosticError, DomainError,
                     FeasibilityError, InvariantViolation, QbgkError,
                     SaturationError, SolverError)
from .grid import (Moments, MomentumGrid, build_grid, compute_moments,
                   integrate, kinetic_temperature, maxwellian,
                   mixture_temperature, mixture_velocity, moment_table)
from .integrators import DELTA, GAMMA, RunResult, run
from .relaxation import (CollisionFrequencies, Mixture, Species,
                         collision_rhs, implicit_update,
                         implicit_update_field, stage_denominators)
from .report import (render_figures, render_profile_figure, write_profile,
                     write_series)
from .scenarios import (RunSetup, build_setup, fermi_state, scenario_names,
                        scenario_preset)
from .statistics import ParticleStatistics, eta_integrals
from .transport import SpatialDomain, cfl_max_dt, transport_tendency

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "SimConfig", "SpeciesConfig", "parse_config",
    "DiagnosticsCollector", "DiagnosticsRecord", "SpeciesState",
    "analytic_kinetic_temperature_gap", "analytic_velocity_gap",
    "equilibrium_temperature", "physical_temperature", "spatial_profile",
    "total_entropy",
    "InterAlpha", "IntraAlpha", "abc_to_alpha", "alpha_to_abc",
    "classical_fit", "equilibrium_field", "solve_all_pairs", "solve_inter",
    "solve_intra",
    "ConfigurationError", "DiagnosticError", "DomainError",
    "FeasibilityError", "InvariantViolation", "QbgkError",
    "SaturationError", "SolverError",
    "Moments", "MomentumGrid", "build_grid", "compute_moments", "integrate",
    "kinetic_temperature", "maxwellian", "mixture_temperature",
    "mixture_velocity", "moment_table",
    "DELTA", "GAMMA", "RunResult", "run",
    "CollisionFrequencies", "Mixture", "Species", "collision_rhs",
    "implicit_update", "implicit_update_field", "stage_denominators",
    "render_figures", "render_profile_figure", "write_profile",
    "write_series",
    "RunSetup", "build_setup", "fermi_state", "scenario_names",
    "scenario_preset",
    "ParticleStatistics", "eta_integrals",
    "SpatialDomain", "cfl_max_dt", "transport_tendency",
]
