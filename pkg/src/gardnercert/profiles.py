"""Initial-profile constructors shared by the CLI and the test suite."""

from __future__ import annotations

import numpy as np

from .grid import GridSpec, RealGridFunction, forward, sobolev_norm
from .oracle import SolitonParams, gardner_soliton


def gaussian(grid: GridSpec, amplitude: float, width: float, center: float = 0.0) -> RealGridFunction:
    """amplitude * exp(-(x - center)^2 / (2 width^2))."""
    z = (grid.x - center) / width
    return RealGridFunction(grid, amplitude * np.exp(-0.5 * z * z))


def sech(grid: GridSpec, amplitude: float, width: float, center: float = 0.0) -> RealGridFunction:
    """amplitude / cosh((x - center) / width)."""
    return RealGridFunction(grid, amplitude / np.cosh((grid.x - center) / width))


def soliton(grid: GridSpec, speed: float, center: float = 0.0) -> RealGridFunction:
    return gardner_soliton(SolitonParams(speed, center), grid)


def scaled_to_norm(f: RealGridFunction, target: float, s) -> RealGridFunction:
    """Rescale amplitude so the H^s norm hits target exactly (norms are 1-homogeneous)."""
    current = sobolev_norm(forward(f), s)
    if current == 0.0:
        raise ValueError("cannot rescale the zero field to a nonzero norm")
    return RealGridFunction(f.grid, f.samples * (target / current))
