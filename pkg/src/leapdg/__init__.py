"""Iterative leap-frog discontinuous Galerkin solver for the 2D TE Maxwell system
in anisotropic media with Silver-Müller absorbing boundaries."""

from .discretization import build_discretization
from .errors import (BlowUpError, ConfigError, LeapDGError, MaterialError, MeshError,
                     NonConvergenceError)
from .materials import Material, build_material_field, effective_permittivity, face_impedances
from .mesh import Mesh, build_mesh, generate_structured_square, load_mesh, mesh_quality
from .reference import build_reference_operators
from .scenarios import ManufacturedScenario, ScatteringScenario, make_scenario
from .semidiscrete import FieldState, MaxwellOperator, build_operator
from .solver import Problem, build_problem, structured_problem
from .timestep import SchemeConfig, estimate_dt, run, step

__version__ = "0.1.0"
