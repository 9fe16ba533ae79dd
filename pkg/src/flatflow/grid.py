"""Uniform Cartesian grid over the unit square with cell- and edge-centered storage."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Uniform grid on (0,1)x(0,1): nx cells across, nz layers up."""

    nx: int
    nz: int
    dx: float
    dz: float

    @property
    def n_cells(self) -> int:
        return self.nx * self.nz

    def cell_index(self, i: int, j: int) -> int:
        """Flat index of cell (i, j); layer-major, i contiguous."""
        return j * self.nx + i

    def cell_coords(self, index: int) -> tuple[int, int]:
        j, i = divmod(index, self.nx)
        return i, j

    def cell_centers_x(self) -> np.ndarray:
        return (np.arange(self.nx) + 0.5) * self.dx

    def cell_centers_z(self) -> np.ndarray:
        return (np.arange(self.nz) + 0.5) * self.dz


def build_grid(nx: int, nz: int) -> Grid:
    if nx < 1 or nz < 1:
        raise ValueError(f"cell counts must be positive, got nx={nx}, nz={nz}")
    return Grid(nx=int(nx), nz=int(nz), dx=1.0 / nx, dz=1.0 / nz)


@dataclass
class ScalarField:
    """Cell-centered values, flat array of length nx*nz (layer-major, bottom first)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if self.values.size != self.grid.n_cells:
            raise ValueError(
                f"field length {self.values.size} != nx*nz = {self.grid.n_cells}"
            )

    @property
    def matrix(self) -> np.ndarray:
        """(nz, nx) view, row j = layer j."""
        return self.values.reshape(self.grid.nz, self.grid.nx)

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())

    @classmethod
    def zeros(cls, grid: Grid) -> "ScalarField":
        return cls(grid, np.zeros(grid.n_cells))

    @classmethod
    def full(cls, grid: Grid, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.n_cells, float(value)))

    @classmethod
    def from_matrix(cls, grid: Grid, matrix: np.ndarray) -> "ScalarField":
        m = np.asarray(matrix, dtype=np.float64)
        if m.shape != (grid.nz, grid.nx):
            raise ValueError(f"expected shape {(grid.nz, grid.nx)}, got {m.shape}")
        return cls(grid, m.reshape(-1).copy())


@dataclass
class EdgeField:
    """Edge-centered velocity components: u on vertical edges, w on horizontal edges."""

    grid: Grid
    x_edges: np.ndarray  # (nx+1)*nz values, u at edges between columns
    z_edges: np.ndarray  # nx*(nz+1) values, w at edges between layers

    def __post_init__(self):
        g = self.grid
        self.x_edges = np.asarray(self.x_edges, dtype=np.float64).reshape(-1)
        self.z_edges = np.asarray(self.z_edges, dtype=np.float64).reshape(-1)
        if self.x_edges.size != (g.nx + 1) * g.nz:
            raise ValueError("x_edges has wrong length")
        if self.z_edges.size != g.nx * (g.nz + 1):
            raise ValueError("z_edges has wrong length")

    @property
    def u(self) -> np.ndarray:
        """(nz, nx+1) view of horizontal velocities."""
        return self.x_edges.reshape(self.grid.nz, self.grid.nx + 1)

    @property
    def w(self) -> np.ndarray:
        """(nz+1, nx) view of vertical velocities."""
        return self.z_edges.reshape(self.grid.nz + 1, self.grid.nx)

    @classmethod
    def zeros(cls, grid: Grid) -> "EdgeField":
        return cls(
            grid,
            np.zeros((grid.nx + 1) * grid.nz),
            np.zeros(grid.nx * (grid.nz + 1)),
        )


@dataclass(frozen=True)
class PiecewiseConstant:
    """Piecewise-constant profile on [0,1]: values[k] on (breaks[k-1], breaks[k]]."""

    breakpoints: tuple[float, ...] = field(default=())
    values: tuple[float, ...] = field(default=(0.0,))

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        vals = tuple(float(v) for v in self.values)
        if len(vals) != len(bp) + 1:
            raise ValueError("need len(values) == len(breakpoints) + 1")
        if any(b2 <= b1 for b1, b2 in zip(bp, bp[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if bp and (bp[0] <= 0.0 or bp[-1] >= 1.0):
            raise ValueError("breakpoints must lie strictly inside (0,1)")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, value: float) -> "PiecewiseConstant":
        return cls((), (value,))

    @classmethod
    def from_intervals(cls, rows: list[tuple[float, float, float]]) -> "PiecewiseConstant":
        """Build from (lo, hi, value) rows that must tile [0,1] in order."""
        if not rows:
            raise ValueError("empty profile")
        breaks = []
        values = []
        pos = 0.0
        for lo, hi, val in rows:
            if abs(lo - pos) > 1e-12:
                raise ValueError(f"interval [{lo}, {hi}] does not start at {pos}")
            if hi <= lo:
                raise ValueError(f"empty interval [{lo}, {hi}]")
            values.append(float(val))
            if hi < 1.0 - 1e-12:
                breaks.append(float(hi))
            pos = hi
        if abs(pos - 1.0) > 1e-12:
            raise ValueError("intervals do not cover [0,1]")
        return cls(tuple(breaks), tuple(values))

    def intervals(self) -> list[tuple[float, float, float]]:
        edges = (0.0, *self.breakpoints, 1.0)
        return [(edges[k], edges[k + 1], self.values[k]) for k in range(len(self.values))]

    def __call__(self, z: float) -> float:
        for k, b in enumerate(self.breakpoints):
            if z <= b:
                return self.values[k]
        return self.values[-1]

    def integral(self, a: float, b: float) -> float:
        """Exact integral over [a, b] within [0,1]."""
        total = 0.0
        for lo, hi, val in self.intervals():
            left = max(a, lo)
            right = min(b, hi)
            if right > left:
                total += val * (right - left)
        return total


MIDPOINT_SAMPLES = 64  # per layer, for profiles given as plain callables


def layer_average(profile, nz: int) -> np.ndarray:
    """Average a profile on [0,1] over nz equal layers (entry j = layer j, bottom first).

    Piecewise-constant profiles are integrated exactly, breakpoints inside a
    layer included; general callables use a composite midpoint rule.
    """
    if nz < 1:
        raise ValueError("nz must be positive")
    dz = 1.0 / nz
    out = np.empty(nz)
    if isinstance(profile, PiecewiseConstant):
        # work in layer units; snap breakpoints sitting on layer boundaries
        # so that resolved profiles average exactly
        def snap(p):
            r = round(p)
            return float(r) if abs(p - r) < 1e-9 * max(1.0, abs(p)) else p

        intervals = [(snap(lo * nz), snap(hi * nz), val)
                     for lo, hi, val in profile.intervals()]
        for j in range(nz):
            acc = 0.0
            for lo, hi, val in intervals:
                left = max(lo, float(j))
                right = min(hi, float(j + 1))
                if right > left:
                    acc += val * (right - left)
            out[j] = acc
    else:
        for j in range(nz):
            zs = j * dz + (np.arange(MIDPOINT_SAMPLES) + 0.5) * (dz / MIDPOINT_SAMPLES)
            out[j] = float(np.mean([profile(z) for z in zs]))
    return out
