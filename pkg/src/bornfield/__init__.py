"""Solver and duality certifier for point-charge Born-Infeld electrostatics.

The package computes the unique decaying solution of

    -div( grad u / sqrt(1 - |grad u|^2) ) = 4 pi sum_n a_n delta_{s_n}

on a truncated box by graduated convex minimization, certifies it through
the dual displacement-field principle, and exposes the exact single-charge
solution as an independent oracle.  Solutions double as maximal spacelike
slices of Minkowski space with lightcone defects of prescribed integral
mean curvature.
"""

__version__ = "0.1.0"

from .boost import Boost, boost_graph, solve_with_linear_asymptotics
from .born import BornSolution, born_energy, born_gradient, born_potential, trial_value
from .charges import (
    ChargeConfiguration,
    PointCharge,
    UnitSystem,
    normalize,
    read_config_file,
    to_dimensionless,
    write_config_file,
)
from .discretization import (
    Grid,
    MollifiedSource,
    ScalarField,
    VectorField,
    build_mollified_source,
    divergence,
    dual_field,
    functional_value,
    gradient,
    weak_residual,
)
from .duality import Certificate, certify, check_identity, dual_energy_G, harmonic_field
from .energy import SingularGradientError, TaylorEnergy, coefficient, f_exact
from .geometry import MaximalSliceView, curvatures_report, volume_deficit
from .solver import SolveReport, SolverConfig, minimize_stage, solve, solve_dirichlet

__all__ = [
    "__version__",
    "Boost",
    "boost_graph",
    "solve_with_linear_asymptotics",
    "BornSolution",
    "born_energy",
    "born_gradient",
    "born_potential",
    "trial_value",
    "ChargeConfiguration",
    "PointCharge",
    "UnitSystem",
    "normalize",
    "read_config_file",
    "to_dimensionless",
    "write_config_file",
    "Grid",
    "MollifiedSource",
    "ScalarField",
    "VectorField",
    "build_mollified_source",
    "divergence",
    "dual_field",
    "functional_value",
    "gradient",
    "weak_residual",
    "Certificate",
    "certify",
    "check_identity",
    "dual_energy_G",
    "harmonic_field",
    "SingularGradientError",
    "TaylorEnergy",
    "coefficient",
    "f_exact",
    "MaximalSliceView",
    "curvatures_report",
    "volume_deficit",
    "SolveReport",
    "SolverConfig",
    "minimize_stage",
    "solve",
    "solve_dirichlet",
]
