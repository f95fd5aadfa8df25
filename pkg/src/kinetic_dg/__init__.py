"""Discontinuous Galerkin solver for the Boltzmann equation in a moving velocity frame."""

from .collision import (
    BoltzmannOperator,
    CollisionKernel,
    SphereRule,
    apply_bgk,
    apply_boltzmann_weak,
    conservation_fix,
    precollision_velocities,
    sphere_quadrature,
)
from .config import ScenarioConfig, parse_config
from .dg import BoundarySpec, KineticTransport
from .errors import (
    ConfigError,
    DegenerateStateError,
    FrameError,
    InvalidArgumentError,
    KineticError,
    SolverAbort,
)
from .frame import AnsatzFrame, macroscopics_from_standard, macroscopics_to_standard
from .hermite import gauss_hermite_rule, tensor_rule_3d
from .integrator import CollisionModel, Solver, StepReport
from .spatial import CGSpace, DGSpace, Mesh1D
from .velocity import MacroscopicState, moments, project_maxwellian, velocity_basis

__version__ = "0.1.0"

__all__ = [
    "AnsatzFrame",
    "BoltzmannOperator",
    "BoundarySpec",
    "CGSpace",
    "CollisionKernel",
    "CollisionModel",
    "ConfigError",
    "DGSpace",
    "DegenerateStateError",
    "FrameError",
    "InvalidArgumentError",
    "KineticError",
    "KineticTransport",
    "MacroscopicState",
    "Mesh1D",
    "ScenarioConfig",
    "Solver",
    "SolverAbort",
    "SphereRule",
    "StepReport",
    "apply_bgk",
    "apply_boltzmann_weak",
    "conservation_fix",
    "gauss_hermite_rule",
    "macroscopics_from_standard",
    "macroscopics_to_standard",
    "moments",
    "parse_config",
    "precollision_velocities",
    "project_maxwellian",
    "sphere_quadrature",
    "tensor_rule_3d",
    "velocity_basis",
]
