"""damflow: penalized solver and uniqueness certifier for the unsteady
dam problem in a heterogeneous rectangular porous medium."""

from .geometry import (BoundaryTags, DamGeometry, Grid, NodeKind, build_grid,
                       classify_boundary, dirichlet_values)
from .permeability import (AssumptionReport, PermeabilityField, SymTensor2,
                           constant_anisotropic_field, eval_tensor, grid_sampled_field,
                           identity_field, layered_field, load_field_csv, smooth_field,
                           validate_assumptions)
from .penalty import (PenaltyConfig, complementarity_bound, g_eps, g_eps_derivative,
                      heaviside_eps, heaviside_eps_derivative)
from .problem_data import (OrderingReport, ProblemData, SolutionField, hydrostatic_head,
                           hydrostatic_profile, load_solution_csv, make_barrier_data,
                           two_reservoir_head, validate_initial)
from .stationary import StationarySolve, assemble_stationary_residual, solve_stationary
from .evolution import EvolutionConfig, Trajectory, project_initial, solve_unsteady, step
from .certify import (CertificateReport, DifferencePair, DualSolver, EnergySeries,
                      check_sandwich, energy, extract_free_boundary, gronwall_monitor,
                      sign_check, solve_dual, steklov_average, steklov_derivative)
from .errors import (AssumptionViolation, DamflowError, IncompatibleRuns, InvalidArgument,
                     InvalidData, NonConvergence, OutOfDomain, StepFailure)

__version__ = "0.1.0"
