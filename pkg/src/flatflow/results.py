"""Run outputs: snapshots, mass ledger, phase timings, solver statistics."""
from __future__ import annotations

from dataclasses import dataclass, field

from .analysis import MassLedger
from .grid import ScalarField


@dataclass
class PhaseTimings:
    pressure: float = 0.0
    transport: float = 0.0
    total: float = 0.0


@dataclass
class RunResult:
    scenario: "Scenario"  # noqa: F821  (scenario echo; avoids import cycle)
    snapshots: list[tuple[float, ScalarField]] = field(default_factory=list)
    ledger: MassLedger = field(default_factory=lambda: MassLedger(0.0))
    timings: PhaseTimings = field(default_factory=PhaseTimings)
    stats: dict = field(default_factory=dict)

    @property
    def final(self) -> ScalarField:
        return self.snapshots[-1][1]

    def snapshot_at(self, time: float) -> ScalarField:
        for t, f in self.snapshots:
            if t == time:
                return f
        raise KeyError(f"no snapshot at t={time}")
