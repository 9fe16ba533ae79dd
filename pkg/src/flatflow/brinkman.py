"""Brinkman-regularized solvers: pseudo-parabolic reduced model and full IMPES pair.

Both models share an IMEX step: explicit upwind advection and explicit
nonlinear edge diffusion, then an implicit increment solve with the Helmholtz
operator I - (beta_x/dx^2) Dxx - (beta_z/dz^2) Dzz. The operator keeps the
mirror closure laterally and wraps periodically in z; transport fluxes keep
impermeable walls. Constitutive functions are evaluated at saturations clamped
to [0,1]: the pseudo-parabolic term has no maximum principle and transient
excursions outside the physical range would otherwise feed back through the
non-monotone tails of the flux function.
"""
from __future__ import annotations

import time as _time
from dataclasses import dataclass

import numpy as np

from . import backend
from .analysis import MassLedger, field_mass
from .grid import EdgeField, Grid, ScalarField
from .linalg import cg_solve
from .physics import (FluidModel, _diffusion_raw, diffusion_bound,
                      fractional_flow_derivative_bound)
from .results import PhaseTimings, RunResult
from .scenario import Scenario, ScenarioError
from .tp import (assemble_pressure, darcy_velocities, normalize_unit_influx,
                 solve_pressure)
from .ve import CFL_SLACK, CflError, plan_stops

INITIAL_DECAY = 1e5  # stiffness of the inflow-decay initial profile
DIFFUSION_CFL = 0.25


@dataclass(frozen=True)
class BrinkmanParams:
    beta_x: float
    beta_z: float
    eps_x: float
    eps_z: float
    mu_e: float | None = None

    def __post_init__(self):
        for name in ("beta_x", "beta_z", "eps_x", "eps_z"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    @classmethod
    def from_viscosity(cls, mu_e: float, height: float, length: float) -> "BrinkmanParams":
        """beta_x = mu_e/L^2, beta_z = mu_e/H^2, eps = sqrt(beta)."""
        bx = mu_e / (length * length)
        bz = mu_e / (height * height)
        return cls(beta_x=bx, beta_z=bz, eps_x=np.sqrt(bx), eps_z=np.sqrt(bz), mu_e=mu_e)


def resolve_params(scenario: Scenario, gamma: float | None = None) -> BrinkmanParams:
    """Effective Brinkman parameters for a scenario.

    Explicit beta values win; otherwise they derive from mu_e with the domain
    height and length, the length falling back to height/gamma. eps defaults
    to sqrt(beta) unless given.
    """
    gamma = gamma if gamma is not None else scenario.gamma
    if scenario.beta_x is not None or scenario.beta_z is not None:
        bx = scenario.beta_x if scenario.beta_x is not None else 0.0
        bz = scenario.beta_z if scenario.beta_z is not None else 0.0
    elif scenario.mu_e is not None and scenario.height is not None:
        length = scenario.length
        if length is None:
            if gamma is None:
                raise ScenarioError("need length or gamma to derive beta_x from mu_e")
            length = scenario.height / gamma
        bx = scenario.mu_e / (length * length)
        bz = scenario.mu_e / (scenario.height * scenario.height)
    else:
        raise ScenarioError(
            "Brinkman model needs beta_x/beta_z or mu_e with height (and length or gamma)")
    ex = scenario.eps_x if scenario.eps_x is not None else float(np.sqrt(bx))
    ez = scenario.eps_z if scenario.eps_z is not None else float(np.sqrt(bz))
    return BrinkmanParams(beta_x=bx, beta_z=bz, eps_x=ex, eps_z=ez, mu_e=scenario.mu_e)


@dataclass
class HelmholtzOperator:
    """I - (beta_x/dx^2) Dxx - (beta_z/dz^2) Dzz; mirror in x, periodic in z.

    Applied in difference form so constant fields pass through bitwise.
    """

    nx: int
    nz: int
    cx: float
    cz: float

    @property
    def n(self) -> int:
        return self.nx * self.nz

    def matvec(self, x: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        x2 = x.reshape(self.nz, self.nx)
        if out is None:
            out = np.empty_like(x2)
        backend.kernels().helmholtz_matvec(self.cx, self.cz, x2, out)
        return out

    def diagonal(self) -> np.ndarray:
        diag = np.full((self.nz, self.nx), 1.0 + (2.0 * self.cz if self.nz > 1 else 0.0))
        if self.nx > 1:
            diag[:, 1:-1] += 2.0 * self.cx
            diag[:, 0] += self.cx
            diag[:, -1] += self.cx
        return diag.reshape(-1)

    def x_line_preconditioner(self):
        """Exact row-tridiagonal solves; pays off once cx dominates.

        The periodic z coupling stays with the Krylov iteration, so this is
        only offered when the x coefficient is both large and dominant.
        """
        if not (self.nx > 1 and self.cx >= max(4.0 * self.cz, 2.0)):
            return None
        diag = np.ascontiguousarray(self.diagonal().reshape(self.nz, self.nx).T)
        band = np.full((self.nx - 1, self.nz), -self.cx)
        work = np.empty_like(diag)
        out = np.empty_like(diag)

        def apply(r: np.ndarray) -> np.ndarray:
            np.copyto(work, r.reshape(self.nz, self.nx).T)
            backend.kernels().thomas_columns(band, diag, band, work, out)
            return out.T.reshape(-1).copy()

        return apply

    def to_dense(self) -> np.ndarray:
        a = np.empty((self.n, self.n))
        e = np.zeros(self.n)
        for k in range(self.n):
            e[k] = 1.0
            a[:, k] = self.matvec(e).reshape(-1)
            e[k] = 0.0
        return a


def assemble_helmholtz(params: BrinkmanParams, grid: Grid) -> HelmholtzOperator:
    nz, nx = grid.nz, grid.nx
    cx = params.beta_x / (grid.dx * grid.dx) if nx > 1 else 0.0
    cz = params.beta_z / (grid.dz * grid.dz) if nz > 1 else 0.0
    return HelmholtzOperator(nx=nx, nz=nz, cx=cx, cz=cz)


def bve_initial_condition(inflow_values: np.ndarray, grid: Grid) -> ScalarField:
    """Smooth rapid decay from the inflow values at x=0 to zero at x=1."""
    inflow_values = np.asarray(inflow_values, dtype=np.float64)
    if np.any(inflow_values < 0) or np.any(inflow_values > 1):
        raise ValueError("inflow values outside [0,1]")
    x = np.arange(grid.nx) * grid.dx
    shape = (1.0 - x) ** 2 / (INITIAL_DECAY * x * x + (1.0 - x) ** 2)
    return ScalarField(grid, (inflow_values[:, None] * shape[None, :]).reshape(-1))


def _edge_diffusion(sc: np.ndarray, kap: np.ndarray, m: float):
    """H at interior edges from arithmetic means of saturation and permeability."""
    hx = _diffusion_raw(0.5 * (sc[:, 1:] + sc[:, :-1]),
                        0.5 * (kap[:, 1:] + kap[:, :-1]), m)
    hz = _diffusion_raw(0.5 * (sc[1:, :] + sc[:-1, :]),
                        0.5 * (kap[1:, :] + kap[:-1, :]), m) if sc.shape[0] > 1 else np.zeros((0, sc.shape[1]))
    return hx, hz


@dataclass
class BveState:
    saturation: ScalarField
    time: float = 0.0
    step_count: int = 0


@dataclass
class BveProblem:
    grid: Grid
    model: FluidModel
    kappa: ScalarField
    inflow: np.ndarray
    params: BrinkmanParams
    helmholtz_tol: float = 1e-12

    def __post_init__(self):
        self.inflow = np.asarray(self.inflow, dtype=np.float64)
        self.derivative_bound = fractional_flow_derivative_bound(self.model)
        self.h_bound = diffusion_bound(self.model, float(self.kappa.values.max()))
        self._implicit = self.params.beta_x > 0 or self.params.beta_z > 0
        self.operator = assemble_helmholtz(self.params, self.grid) if self._implicit else None
        self._precond = self.operator.x_line_preconditioner() if self._implicit else None
        self._delta_guess = None

    def velocity(self, state: BveState):
        sc = np.clip(state.saturation.matrix, 0.0, 1.0)
        u, w, den = backend.kernels().reconstruct_uw(
            sc, self.kappa.matrix, self.model.viscosity_ratio,
            self.grid.dx, self.grid.dz)
        return EdgeField(self.grid, u.reshape(-1), w.reshape(-1)), den

    def _dt_limits(self, edges: EdgeField) -> tuple[float, float]:
        g = self.grid
        umax = float(np.abs(edges.u).max())
        wmax = float(np.abs(edges.w).max())
        adv_rate = self.derivative_bound * (umax / g.dx + wmax / g.dz)
        diff_rate = self.h_bound * (self.params.eps_x / g.dx ** 2
                                    + self.params.eps_z / g.dz ** 2)
        adv = np.inf if adv_rate == 0 else 1.0 / adv_rate
        diff = np.inf if diff_rate == 0 else 0.5 / diff_rate
        return adv, diff

    def stable_dt(self, edges: EdgeField, cfl_factor: float) -> float:
        g = self.grid
        lf = self.derivative_bound
        umax = float(np.abs(edges.u).max())
        wmax = float(np.abs(edges.w).max())
        dt = cfl_factor * g.dx / (umax * lf)
        if wmax > 0.0:
            dt = min(dt, cfl_factor * g.dz / (wmax * lf))
        if self.params.eps_x > 0:
            dt = min(dt, DIFFUSION_CFL * g.dx ** 2 / (self.params.eps_x * self.h_bound))
        if self.params.eps_z > 0:
            dt = min(dt, DIFFUSION_CFL * g.dz ** 2 / (self.params.eps_z * self.h_bound))
        return dt

    def explicit_rhs(self, state: BveState, edges: EdgeField,
                     ledger_rates: list | None = None) -> np.ndarray:
        g = self.grid
        s = state.saturation.matrix
        sc = np.clip(s, 0.0, 1.0)
        rhs, influx, outflux = backend.kernels().upwind_rhs(
            edges.u, edges.w, sc, self.inflow, self.model.viscosity_ratio,
            g.dx, g.dz)
        if self.params.eps_x > 0 or self.params.eps_z > 0:
            hx, hz = _edge_diffusion(sc, self.kappa.matrix, self.model.viscosity_ratio)
            backend.kernels().diffusion_rhs_add(
                rhs, s, hx, hz, self.params.eps_x, self.params.eps_z, g.dx, g.dz)
        if ledger_rates is not None:
            ledger_rates[:] = [influx, outflux]
        return rhs

    def step(self, state: BveState, edges: EdgeField, dt: float,
             ledger: MassLedger | None = None) -> tuple[BveState, int]:
        adv, diff = self._dt_limits(edges)
        if dt <= 0:
            raise ValueError("dt must be positive")
        if dt > min(adv, diff) * CFL_SLACK:
            raise CflError(f"dt={dt:g} violates the explicit stability bounds")
        rates: list = []
        rhs = self.explicit_rhs(state, edges, rates)
        iters = 0
        if self._implicit:
            delta_flat, iters = cg_solve(self.operator, (dt * rhs).reshape(-1),
                                         x0=self._delta_guess, rel_tol=self.helmholtz_tol,
                                         precond=self._precond)
            self._delta_guess = delta_flat
            delta = delta_flat.reshape(self.grid.nz, self.grid.nx)
        else:
            delta = dt * rhs
        if ledger is not None:
            ledger.injected += dt * rates[0]
            ledger.escaped += dt * rates[1]
        new = state.saturation.matrix + delta
        return BveState(ScalarField(self.grid, new.reshape(-1)),
                        state.time + dt, state.step_count + 1), iters


def bve_step(problem: BveProblem, state: BveState, dt: float,
             ledger: MassLedger | None = None) -> BveState:
    edges, _ = problem.velocity(state)
    new_state, _ = problem.step(state, edges, dt, ledger)
    return new_state


def _run_imex(scenario: Scenario, problem, velocity_of, label: str) -> RunResult:
    grid = scenario.grid()
    state = BveState(bve_initial_condition(scenario.inflow_values(), grid))
    result = RunResult(scenario)
    result.ledger = MassLedger(initial_mass=field_mass(state.saturation))
    stops = plan_stops(scenario)
    if 0.0 in set(scenario.snapshot_times) or scenario.end_time == 0.0:
        result.snapshots.append((0.0, state.saturation.copy()))
    t_pressure = 0.0
    t_transport = 0.0
    cg_total = 0
    solves = 0
    steps = 0
    t0 = _time.perf_counter()
    for stop in stops:
        while state.time < stop - 1e-14:
            tp0 = _time.perf_counter()
            edges, aux = velocity_of(state)
            tp1 = _time.perf_counter()
            dt = min(problem.stable_dt(edges, scenario.cfl_factor), stop - state.time)
            state, iters = problem.step(state, edges, dt, result.ledger)
            cg_total += iters
            if isinstance(aux, int):
                solves += aux
            t_pressure += tp1 - tp0
            t_transport += _time.perf_counter() - tp1
            steps += 1
        state.time = stop
        result.snapshots.append((stop, state.saturation.copy()))
    total = _time.perf_counter() - t0
    result.ledger.current_mass = field_mass(state.saturation)
    result.timings = PhaseTimings(pressure=t_pressure, transport=t_transport, total=total)
    result.stats = {"steps": steps, "cg_iterations": cg_total,
                    "pressure_solves": solves, "solver": label}
    return result


def run_bve(scenario: Scenario) -> RunResult:
    """Reduced Brinkman model: nonlocal velocities, no pressure system."""
    grid = scenario.grid()
    params = resolve_params(scenario)
    problem = BveProblem(grid, scenario.fluid_model(), scenario.kappa_field(grid),
                         scenario.inflow_values(), params, scenario.helmholtz_tol)
    return _run_imex(scenario, problem, lambda st: problem.velocity(st), "BVE")


@dataclass
class BtpProblem(BveProblem):
    """Full Brinkman pair: velocities come from the elliptic pressure solve."""

    gamma: float = 1.0
    pressure_tol: float = 1e-10

    def __post_init__(self):
        super().__post_init__()
        self._p_guess = None

    def pressure_velocity(self, state: BveState):
        sc = ScalarField(self.grid,
                         np.clip(state.saturation.values, 0.0, 1.0))
        system = assemble_pressure(sc, self.kappa, self.gamma, self.grid, self.model)
        p_flat, iters = solve_pressure(system, self.pressure_tol, x0=self._p_guess)
        self._p_guess = p_flat
        edges = darcy_velocities(ScalarField(self.grid, p_flat), sc, self.kappa,
                                 self.gamma, self.grid, self.model)
        normalize_unit_influx(edges)
        return edges, iters


def run_btp(scenario: Scenario) -> RunResult:
    """IMPES for the Brinkman pair: pressure implicit, transport explicit,
    pseudo-parabolic increment implicit."""
    grid = scenario.grid()
    params = resolve_params(scenario)
    problem = BtpProblem(grid, scenario.fluid_model(), scenario.kappa_field(grid),
                         scenario.inflow_values(), params, scenario.helmholtz_tol,
                         gamma=scenario.gamma, pressure_tol=scenario.pressure_tol)
    return _run_imex(scenario, problem, problem.pressure_velocity, "BTP")


def recover_velocity(edges: EdgeField, params: BrinkmanParams,
                     helmholtz_tol: float = 1e-12) -> EdgeField:
    """Physical velocities from Darcy-side ones: Helmholtz inversion per component.

    Diagnostic operation; the transport itself advances the flux form directly,
    which already carries the Brinkman correction through the implicit step.
    """
    g = edges.grid
    u_grid = type(g)(nx=g.nx + 1, nz=g.nz, dx=g.dx, dz=g.dz)
    op_u = assemble_helmholtz(params, u_grid)
    u_flat, _ = cg_solve(op_u, edges.x_edges, rel_tol=helmholtz_tol)
    w_grid = type(g)(nx=g.nx, nz=g.nz + 1, dx=g.dx, dz=g.dz)
    op_w = assemble_helmholtz(params, w_grid)
    w_flat, _ = cg_solve(op_w, edges.z_edges, rel_tol=helmholtz_tol)
    return EdgeField(g, u_flat, w_flat)
