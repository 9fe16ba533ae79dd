"""Nonlocal vertical-equilibrium saturation solver (finite volumes, explicit upwind).

The velocity is reconstructed from the saturation itself: horizontal velocity
is each cell's mobility*permeability normalized by its column integral
(edge value = mean of the two adjacent columns), vertical velocity telescopes
the horizontal divergence up from the impermeable bottom wall. The injected
total flux is one by construction, which fixes the free time normalization.
"""
from __future__ import annotations

import time as _time
from dataclasses import dataclass

import numpy as np

from . import backend
from .analysis import MassLedger, field_mass
from .grid import EdgeField, Grid, ScalarField
from .physics import (FluidModel, _fractional_flow_raw, _total_mobility_raw,
                      fractional_flow_derivative_bound)
from .results import PhaseTimings, RunResult
from .scenario import Scenario

CFL_SLACK = 1.0 + 1e-9


class CflError(RuntimeError):
    pass


@dataclass
class VeState:
    saturation: ScalarField
    time: float = 0.0
    step_count: int = 0


@dataclass
class NonlocalVelocity:
    edges: EdgeField
    column_denominators: np.ndarray  # per-column integral of mobility*kappa

    @property
    def u(self) -> np.ndarray:
        return self.edges.u

    @property
    def w(self) -> np.ndarray:
        return self.edges.w


def reconstruct_velocity(s: ScalarField, kappa: ScalarField,
                         model: FluidModel) -> NonlocalVelocity:
    """Edge velocities induced by the current saturation (unit total flux)."""
    if np.any(kappa.values <= 0):
        raise ValueError("kappa must be positive")
    g = s.grid
    u, w, den = backend.kernels().reconstruct_uw(
        s.matrix, kappa.matrix, model.viscosity_ratio, g.dx, g.dz)
    return NonlocalVelocity(EdgeField(g, u.reshape(-1), w.reshape(-1)), den)


def upwind_flux(edge_velocity_normal: float, s_inside: float, s_outside: float,
                edge_length: float, model: FluidModel) -> float:
    """Upwind numerical flux through one edge, in outward-normal orientation."""
    m = model.viscosity_ratio
    return edge_length * (
        max(edge_velocity_normal, 0.0) * _fractional_flow_raw(s_inside, m)
        + min(edge_velocity_normal, 0.0) * _fractional_flow_raw(s_outside, m))


def advective_dt_limit(velocity: NonlocalVelocity, grid: Grid,
                       derivative_bound: float) -> float:
    """Largest stable explicit step for the current velocity field."""
    umax = float(np.abs(velocity.u).max())
    wmax = float(np.abs(velocity.w).max())
    rate = derivative_bound * (umax / grid.dx + wmax / grid.dz)
    return np.inf if rate == 0.0 else 1.0 / rate


@dataclass
class VeProblem:
    """Time-independent data of one vertical-equilibrium run."""

    grid: Grid
    model: FluidModel
    kappa: ScalarField
    inflow: np.ndarray          # layer-averaged inflow saturations, length nz
    porosity: float = 1.0

    def __post_init__(self):
        self.inflow = np.asarray(self.inflow, dtype=np.float64)
        if self.inflow.size != self.grid.nz:
            raise ValueError("inflow must have one value per layer")
        self.derivative_bound = fractional_flow_derivative_bound(self.model)

    def velocity(self, state: VeState) -> NonlocalVelocity:
        return reconstruct_velocity(state.saturation, self.kappa, self.model)

    def stable_dt(self, velocity: NonlocalVelocity, cfl_factor: float) -> float:
        g = self.grid
        umax = float(np.abs(velocity.u).max())
        wmax = float(np.abs(velocity.w).max())
        lf = self.derivative_bound
        dt = cfl_factor * g.dx / (umax * lf)
        if wmax > 0.0:
            dt = min(dt, cfl_factor * g.dz / (wmax * lf))
        return dt * self.porosity

    def step(self, state: VeState, velocity: NonlocalVelocity, dt: float,
             ledger: MassLedger | None = None) -> VeState:
        """One explicit update; raises CflError before touching the state."""
        g = self.grid
        if dt <= 0:
            raise ValueError("dt must be positive")
        if dt > self.porosity * advective_dt_limit(velocity, g, self.derivative_bound) * CFL_SLACK:
            raise CflError(f"dt={dt:g} violates the CFL condition")
        rhs, influx, outflux = backend.kernels().upwind_rhs(
            velocity.u, velocity.w, state.saturation.matrix, self.inflow,
            self.model.viscosity_ratio, g.dx, g.dz)
        new = state.saturation.matrix + (dt / self.porosity) * rhs
        if ledger is not None:
            ledger.injected += dt * influx
            ledger.escaped += dt * outflux
        return VeState(ScalarField(g, new.reshape(-1)), state.time + dt,
                       state.step_count + 1)


def ve_step(problem: VeProblem, state: VeState, velocity: NonlocalVelocity,
            dt: float, ledger: MassLedger | None = None) -> VeState:
    return problem.step(state, velocity, dt, ledger)


def plan_stops(scenario: Scenario) -> list[float]:
    stops = sorted(set(scenario.snapshot_times) | {scenario.end_time})
    return [t for t in stops if t > 0.0]


def run_ve(scenario: Scenario) -> RunResult:
    """Advance the vertical-equilibrium model from zero initial saturation to T."""
    grid = scenario.grid()
    problem = VeProblem(grid, scenario.fluid_model(), scenario.kappa_field(grid),
                        scenario.inflow_values(), scenario.porosity)
    state = VeState(ScalarField.zeros(grid))
    result = RunResult(scenario)
    result.ledger = MassLedger(initial_mass=field_mass(state.saturation, scenario.porosity))
    stops = plan_stops(scenario)
    if 0.0 in set(scenario.snapshot_times) or scenario.end_time == 0.0:
        result.snapshots.append((0.0, state.saturation.copy()))
    t0 = _time.perf_counter()
    steps = 0
    for stop in stops:
        while state.time < stop - 1e-14:
            velocity = problem.velocity(state)
            dt = min(problem.stable_dt(velocity, scenario.cfl_factor),
                     stop - state.time)
            state = problem.step(state, velocity, dt, result.ledger)
            steps += 1
        state.time = stop
        result.snapshots.append((stop, state.saturation.copy()))
    elapsed = _time.perf_counter() - t0
    result.ledger.current_mass = field_mass(state.saturation, scenario.porosity)
    result.timings = PhaseTimings(pressure=0.0, transport=elapsed, total=elapsed)
    result.stats = {"steps": steps, "cg_iterations": 0}
    return result


def run_vi(scenario: Scenario) -> RunResult:
    """Vertically integrated model: the one-layer special case, same code path.

    Inflow and permeability collapse to their vertical averages through the
    usual layer averaging at nz=1.
    """
    result = run_ve(scenario.with_grid(scenario.nx, 1))
    result.scenario = scenario
    return result
