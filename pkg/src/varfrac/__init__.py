"""Discrete solver and estimate harness for the fractional p-Laplacian with
variable order s(x, y) and variable exponent p(x, y)."""

from .calculus import (PairSystem, SeminormValue, TailValue, crossregion_seminorm, energy,
                       energy_gradient, gagliardo_seminorm, kernel_integral, tail,
                       tail_space_seminorm)
from .errors import ConfigurationError, DivergenceError, EmptyBallError, SingularityError
from .estimator import NonlocalDirichletSolver
from .exterior import (ConstantFar, DiscreteFunction, ExteriorModel, MappedFar, PowerFar,
                       SignFar, ZeroFar, tail_space_member)
from .mesh import BallIndex, Mesh, ball_index, build_mesh, full_region, power_bounds
from .powers import (CheckerboardPerturbation, ConstantField, ConstantPerturbation, KernelSpec,
                     LogModulatedField, SeparableField, TabulatedField, TabulatedPerturbation,
                     UnitPerturbation, kernel_eval, modulus_profile, validate_power_config)
from .solver import (SolverConfig, SolveResult, linear_oracle, minimality_probe,
                     solve_dirichlet)
from .verifier import (InequalityReport, OscillationProfile, algebraic_inequality_check,
                       alpha_sigma_gates, caccioppoli_check, degiorgi_iterate, embedding_check,
                       linf_bound_check, log_estimate_check, oscillation_profile,
                       sobolev_poincare_check)

__version__ = "0.1.0"
