"""Two-phase porous-media flow in flat domains: Darcy and Brinkman regimes.

Solvers for the full two-phase models (TP, BTP) and their nonlocal reduced
counterparts (VE, VI, MS, BVE) on the dimensionless unit square, plus scenario
configuration, analysis utilities, and a benchmark harness.
"""

from .analysis import (FrontReport, MassLedger, front_position, l1_distance,
                       linf_distance, overshoot, timing_report)
from .backend import active_backend, available_backends, set_backend
from .brinkman import (BrinkmanParams, BveProblem, BveState, HelmholtzOperator,
                       assemble_helmholtz,
                       bve_initial_condition, bve_step, recover_velocity,
                       resolve_params, run_btp, run_bve)
from .grid import (EdgeField, Grid, PiecewiseConstant, ScalarField, build_grid,
                   layer_average)
from .linalg import BandedSpd, LinearSolveError, cg_solve, tridiag_solve
from .multiscale import (MsProblem, MsState, coarse_pressure_gradient,
                         coarse_pressure_solve, ms_step, run_multiscale)
from .physics import (FluidModel, diffusion_H, fractional_flow,
                      fractional_flow_derivative_bound, total_mobility)
from .results import PhaseTimings, RunResult
from .scenario import (Scenario, ScenarioError, load_scenario, parse_scenario,
                       read_field, write_field, write_scenario)
from .tp import (PressureSystem, TpProblem, TpState, assemble_pressure,
                 cell_divergence, darcy_velocities, normalize_unit_influx,
                 run_tp, solve_pressure)
from .ve import (CflError, NonlocalVelocity, VeProblem, VeState,
                 reconstruct_velocity, run_ve, run_vi, upwind_flux, ve_step)

__version__ = "0.1.0"
