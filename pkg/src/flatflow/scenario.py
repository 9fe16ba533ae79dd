"""Scenario configuration: line-oriented parsing, serialization, field dumps."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .grid import Grid, PiecewiseConstant, ScalarField, build_grid, layer_average
from .physics import FluidModel

MODELS = ("TP", "VE", "VI", "MS", "BTP", "BVE")

_SCALAR_KEYS = {
    "model": str,
    "nx": int,
    "nz": int,
    "gamma": float,
    "viscosity_ratio": float,
    "end_time": float,
    "cfl_factor": float,
    "porosity": float,
    "mu_e": float,
    "height": float,
    "length": float,
    "beta_x": float,
    "beta_z": float,
    "eps_x": float,
    "eps_z": float,
    "pressure_tol": float,
    "helmholtz_tol": float,
    "snapshot_times": str,
}
_SECTIONS = ("inflow", "permeability")
_REQUIRED = ("model", "nx", "nz", "viscosity_ratio", "end_time", "inflow")


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    """One fully specified experiment; deterministic, no randomness anywhere."""

    model: str
    nx: int
    nz: int
    viscosity_ratio: float
    end_time: float
    inflow: PiecewiseConstant
    permeability: PiecewiseConstant = PiecewiseConstant.constant(1.0)
    gamma: float | None = None
    cfl_factor: float = 0.45
    porosity: float = 1.0
    mu_e: float | None = None
    height: float | None = None
    length: float | None = None
    beta_x: float | None = None
    beta_z: float | None = None
    eps_x: float | None = None
    eps_z: float | None = None
    pressure_tol: float = 1e-10
    helmholtz_tol: float = 1e-12
    snapshot_times: tuple[float, ...] = ()

    def __post_init__(self):
        if self.model not in MODELS:
            raise ScenarioError(f"model must be one of {MODELS}, got {self.model!r}")
        for name in ("nx", "nz"):
            if getattr(self, name) < 1:
                raise ScenarioError(f"{name} must be positive")
        for name in ("viscosity_ratio", "end_time", "cfl_factor", "porosity",
                     "pressure_tol", "helmholtz_tol"):
            if not getattr(self, name) >= 0 or (name != "end_time" and getattr(self, name) == 0):
                raise ScenarioError(f"{name} must be positive")
        for name in ("gamma", "mu_e", "height", "length"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ScenarioError(f"{name} must be positive")
        for name in ("beta_x", "beta_z", "eps_x", "eps_z"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ScenarioError(f"{name} must be nonnegative")
        for _, _, val in self.inflow.intervals():
            if not 0.0 <= val <= 1.0:
                raise ScenarioError(f"inflow value {val} outside [0,1]")
        for _, _, val in self.permeability.intervals():
            if not val > 0:
                raise ScenarioError(f"permeability value {val} must be positive")
        for t in self.snapshot_times:
            if t < 0 or t > self.end_time:
                raise ScenarioError(f"snapshot time {t} outside [0, end_time]")
        if self.model in ("TP", "BTP") and self.gamma is None:
            raise ScenarioError(f"model {self.model} requires gamma")
        if self.model in ("BTP", "BVE") and self.porosity != 1.0:
            raise ScenarioError("Brinkman models support porosity = 1 only")

    def fluid_model(self) -> FluidModel:
        return FluidModel(self.viscosity_ratio)

    def grid(self) -> Grid:
        return build_grid(self.nx, self.nz)

    def inflow_values(self, nz: int | None = None) -> np.ndarray:
        return layer_average(self.inflow, nz if nz is not None else self.nz)

    def kappa_field(self, grid: Grid | None = None) -> ScalarField:
        g = grid if grid is not None else self.grid()
        per_layer = layer_average(self.permeability, g.nz)
        return ScalarField(g, np.repeat(per_layer, g.nx))

    def with_grid(self, nx: int, nz: int) -> "Scenario":
        return replace(self, nx=nx, nz=nz)

    def with_gamma(self, gamma: float) -> "Scenario":
        return replace(self, gamma=gamma)


def _parse_profile_rows(rows: list[tuple[int, str]], name: str) -> PiecewiseConstant:
    intervals = []
    for lineno, text in rows:
        parts = text.replace("->", " ").split()
        if len(parts) != 3:
            raise ScenarioError(
                f"line {lineno}: expected 'lo hi -> value' in [{name}], got {text!r}")
        try:
            lo, hi, val = (float(p) for p in parts)
        except ValueError as exc:
            raise ScenarioError(f"line {lineno}: bad number in [{name}]: {exc}") from exc
        intervals.append((lo, hi, val))
    try:
        return PiecewiseConstant.from_intervals(intervals)
    except ValueError as exc:
        raise ScenarioError(f"[{name}] section: {exc}") from exc


def parse_scenario(text: str) -> Scenario:
    """Parse a line-oriented `key = value` document with profile sections."""
    values: dict = {}
    sections: dict[str, list[tuple[int, str]]] = {}
    current: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in _SECTIONS:
                raise ScenarioError(f"line {lineno}: unknown section [{name}]")
            if name in sections:
                raise ScenarioError(f"line {lineno}: duplicate section [{name}]")
            sections[name] = []
            current = name
            continue
        if current is not None and "=" not in line:
            sections[current].append((lineno, line))
            continue
        current = None
        if "=" not in line:
            raise ScenarioError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _SCALAR_KEYS:
            raise ScenarioError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ScenarioError(f"line {lineno}: duplicate key {key!r}")
        caster = _SCALAR_KEYS[key]
        try:
            values[key] = val if caster is str else caster(val)
        except ValueError as exc:
            raise ScenarioError(f"line {lineno}: bad value for {key}: {exc}") from exc

    for req in _REQUIRED:
        present = req in sections if req == "inflow" else req in values
        if not present:
            raise ScenarioError(f"missing: {req}")

    kwargs = dict(values)
    if "snapshot_times" in kwargs:
        items = [p for p in kwargs["snapshot_times"].replace(",", " ").split() if p]
        kwargs["snapshot_times"] = tuple(float(p) for p in items)
    kwargs["inflow"] = _parse_profile_rows(sections["inflow"], "inflow")
    if "permeability" in sections:
        kwargs["permeability"] = _parse_profile_rows(sections["permeability"], "permeability")
    return Scenario(**kwargs)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_scenario(sc: Scenario) -> str:
    """Canonical text form; parse(write_scenario(parse(doc))) is a fixpoint."""
    lines = [f"model = {sc.model}", f"nx = {sc.nx}", f"nz = {sc.nz}",
             f"viscosity_ratio = {_fmt(sc.viscosity_ratio)}",
             f"end_time = {_fmt(sc.end_time)}",
             f"cfl_factor = {_fmt(sc.cfl_factor)}",
             f"porosity = {_fmt(sc.porosity)}"]
    for name in ("gamma", "mu_e", "height", "length",
                 "beta_x", "beta_z", "eps_x", "eps_z"):
        v = getattr(sc, name)
        if v is not None:
            lines.append(f"{name} = {_fmt(v)}")
    lines.append(f"pressure_tol = {_fmt(sc.pressure_tol)}")
    lines.append(f"helmholtz_tol = {_fmt(sc.helmholtz_tol)}")
    if sc.snapshot_times:
        lines.append("snapshot_times = " + ", ".join(_fmt(t) for t in sc.snapshot_times))
    lines.append("[inflow]")
    for lo, hi, val in sc.inflow.intervals():
        lines.append(f"{_fmt(lo)} {_fmt(hi)} -> {_fmt(val)}")
    lines.append("[permeability]")
    for lo, hi, val in sc.permeability.intervals():
        lines.append(f"{_fmt(lo)} {_fmt(hi)} -> {_fmt(val)}")
    return "\n".join(lines) + "\n"


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def write_field(fld: ScalarField, path, time: float = 0.0):
    """Plain-text dump: header, then nz rows of nx values, bottom layer first.

    Values carry 17 significant digits so the round trip is bit-exact.
    """
    g = fld.grid
    m = fld.matrix
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# nx={g.nx} nz={g.nz} time={time:.17g}\n")
        for j in range(g.nz):
            fh.write(" ".join(f"{v:.16e}" for v in m[j]))
            fh.write("\n")


def read_field(path) -> tuple[ScalarField, float]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("# "):
            raise ValueError(f"{path}: missing field-dump header")
        meta = dict(item.split("=", 1) for item in header[2:].split())
        nx, nz, time = int(meta["nx"]), int(meta["nz"]), float(meta["time"])
        rows = []
        for j in range(nz):
            parts = fh.readline().split()
            if len(parts) != nx:
                raise ValueError(f"{path}: row {j} has {len(parts)} values, expected {nx}")
            rows.append([float(p) for p in parts])
    grid = build_grid(nx, nz)
    values = np.array(rows, dtype=np.float64)
    if np.isnan(values).any() or math.isnan(time):
        raise ValueError(f"{path}: non-finite values")
    return ScalarField.from_matrix(grid, values), time
