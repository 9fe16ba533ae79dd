"""Post-processing: field metrics, mass ledger, front extraction, timing tables."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import ScalarField


@dataclass
class MassLedger:
    """Volume balance of the invading phase over a run."""

    initial_mass: float
    injected: float = 0.0
    escaped: float = 0.0
    current_mass: float = 0.0

    def residual(self) -> float:
        return self.current_mass - (self.initial_mass + self.injected - self.escaped)

    def relative_residual(self) -> float:
        return abs(self.residual()) / max(1.0, abs(self.current_mass))


def _require_same_grid(a: ScalarField, b: ScalarField):
    if a.grid.nx != b.grid.nx or a.grid.nz != b.grid.nz:
        raise ValueError(
            f"grid mismatch: {a.grid.nx}x{a.grid.nz} vs {b.grid.nx}x{b.grid.nz}")


def l1_distance(a: ScalarField, b: ScalarField) -> float:
    """Cell-measure weighted L1 distance on the unit square."""
    _require_same_grid(a, b)
    return a.grid.dx * a.grid.dz * float(np.abs(a.values - b.values).sum())


def linf_distance(a: ScalarField, b: ScalarField) -> float:
    _require_same_grid(a, b)
    return float(np.abs(a.values - b.values).max())


def field_mass(s: ScalarField, porosity: float = 1.0) -> float:
    return s.grid.dx * s.grid.dz * porosity * float(s.values.sum())


def front_from_values(values: np.ndarray, dx: float, threshold: float) -> float:
    """Furthest x where the piecewise-linear interpolant through cell centers
    crosses the threshold, scanning from the inflow side; 0 if never above."""
    v = np.asarray(values, dtype=np.float64)
    n = v.size
    if not np.any(v > threshold):
        return 0.0
    if v[-1] >= threshold:
        return 1.0
    pos = 0.0
    centers = (np.arange(n) + 0.5) * dx
    above = v >= threshold
    for i in range(n - 1):
        if above[i] and not above[i + 1]:
            frac = (v[i] - threshold) / (v[i] - v[i + 1])
            pos = max(pos, centers[i] + frac * dx)
    if above[0]:
        pos = max(pos, centers[0])
    return pos


def front_position(s: ScalarField, layer: int = 0, threshold: float = 0.1) -> float:
    """Front of one layer; layer=None gives the leading front over all layers."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0,1)")
    m = s.matrix
    if layer is None:
        return max(front_from_values(m[j], s.grid.dx, threshold) for j in range(s.grid.nz))
    return front_from_values(m[layer], s.grid.dx, threshold)


def overshoot(s: ScalarField, inflow_max: float) -> float:
    """Excess of the field maximum over the largest injected saturation."""
    if not 0.0 <= inflow_max <= 1.0:
        raise ValueError("inflow_max must lie in [0,1]")
    return max(0.0, float(s.values.max()) - inflow_max)


@dataclass
class FrontReport:
    threshold: float
    per_layer: np.ndarray
    position: float  # leading front over all layers
    speed: float     # position / time

    @classmethod
    def measure(cls, s: ScalarField, time: float, threshold: float = 0.1) -> "FrontReport":
        per_layer = np.array(
            [front_from_values(s.matrix[j], s.grid.dx, threshold) for j in range(s.grid.nz)])
        pos = float(per_layer.max())
        return cls(threshold=threshold, per_layer=per_layer, position=pos,
                   speed=pos / time if time > 0 else 0.0)


@dataclass
class TimingRow:
    label: str
    nx: int
    nz: int
    pressure_seconds: float
    transport_seconds: float
    total_seconds: float
    ratio: float | None = None


@dataclass
class TimingTable:
    rows: list[TimingRow] = field(default_factory=list)

    def text(self) -> str:
        header = f"{'run':<22}{'grid':>12}{'pressure_s':>12}{'transport_s':>12}{'total_s':>10}{'ratio':>9}"
        lines = [header]
        for r in self.rows:
            ratio = f"{r.ratio:.3f}" if r.ratio is not None else "-"
            lines.append(
                f"{r.label:<22}{f'{r.nx}x{r.nz}':>12}{r.pressure_seconds:>12.3f}"
                f"{r.transport_seconds:>12.3f}{r.total_seconds:>10.3f}{ratio:>9}")
        return "\n".join(lines)

    def machine_rows(self) -> str:
        lines = ["# cols: label nx nz pressure_s transport_s total_s ratio"]
        for r in self.rows:
            ratio = f"{r.ratio:.6g}" if r.ratio is not None else "nan"
            lines.append(
                f"{r.label} {r.nx} {r.nz} {r.pressure_seconds:.6g} "
                f"{r.transport_seconds:.6g} {r.total_seconds:.6g} {ratio}")
        return "\n".join(lines)

    def __str__(self) -> str:
        return self.text()


def timing_report(results) -> TimingTable:
    """Timing rows for a list of runs; consecutive pairs get a total-time ratio.

    With runs ordered (a1, b1, a2, b2, ...) each a-row carries ratio t_a/t_b,
    the layout used for model-vs-model benchmark sweeps.
    """
    if not results:
        raise ValueError("need at least one run")
    table = TimingTable()
    for res in results:
        sc = res.scenario
        table.rows.append(TimingRow(
            label=sc.model, nx=sc.nx, nz=sc.nz,
            pressure_seconds=res.timings.pressure,
            transport_seconds=res.timings.transport,
            total_seconds=res.timings.total))
    for k in range(0, len(table.rows) - 1, 2):
        denom = table.rows[k + 1].total_seconds
        if denom > 0:
            table.rows[k].ratio = table.rows[k].total_seconds / denom
    return table
