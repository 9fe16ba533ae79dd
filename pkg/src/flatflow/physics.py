"""Constitutive functions induced by the viscosity ratio of the two phases."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DERIVATIVE_SAMPLES = 20001
SAFETY_MARGIN = 1.01


@dataclass(frozen=True)
class FluidModel:
    """Quadratic relative-permeability pair, parameterized by M = mu_defending / mu_invading."""

    viscosity_ratio: float

    def __post_init__(self):
        if not self.viscosity_ratio > 0:
            raise ValueError(f"viscosity ratio must be positive, got {self.viscosity_ratio}")


def _check_saturation(s):
    s = np.asarray(s, dtype=np.float64)
    if np.any(s < 0.0) or np.any(s > 1.0):
        raise ValueError("saturation outside [0, 1]")
    return s


def _fractional_flow_raw(s, m: float):
    s = np.asarray(s, dtype=np.float64)
    return m * s * s / (m * s * s + (1.0 - s) ** 2)


def _total_mobility_raw(s, m: float):
    s = np.asarray(s, dtype=np.float64)
    return m * s * s + (1.0 - s) ** 2


def _diffusion_raw(s, kappa, m: float):
    s = np.asarray(s, dtype=np.float64)
    return kappa * m * s * s * (1.0 - s) ** 2 / (m * s * s + (1.0 - s) ** 2)


def fractional_flow(s, model: FluidModel):
    """Fraction of total flux carried by the invading phase."""
    return _fractional_flow_raw(_check_saturation(s), model.viscosity_ratio)


def total_mobility(s, model: FluidModel):
    """Sum of phase mobilities; bounded below by M/(M+1)."""
    return _total_mobility_raw(_check_saturation(s), model.viscosity_ratio)


def diffusion_H(s, kappa, model: FluidModel):
    """Nonlinear diffusion coefficient kappa * M s^2 (1-s)^2 / (M s^2 + (1-s)^2)."""
    if np.any(np.asarray(kappa) <= 0):
        raise ValueError("kappa must be positive")
    return _diffusion_raw(_check_saturation(s), kappa, model.viscosity_ratio)


def fractional_flow_derivative_bound(model: FluidModel) -> float:
    """Upper bound on sup |f'(s)| over [0,1], by dense sampling with a 1% margin."""
    m = model.viscosity_ratio
    s = np.linspace(0.0, 1.0, DERIVATIVE_SAMPLES)
    g = m * s * s + (1.0 - s) ** 2
    deriv = 2.0 * m * s * (1.0 - s) / (g * g)
    return float(deriv.max()) * SAFETY_MARGIN


def diffusion_bound(model: FluidModel, kappa_max: float) -> float:
    """Upper bound on sup H(s) over [0,1] for the largest permeability."""
    s = np.linspace(0.0, 1.0, DERIVATIVE_SAMPLES)
    return float(_diffusion_raw(s, kappa_max, model.viscosity_ratio).max()) * SAFETY_MARGIN
