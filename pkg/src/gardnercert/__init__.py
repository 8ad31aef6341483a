"""Certified Picard-Duhamel solver for the Gardner (combined KdV) equation.

u_t + u u_x + u^2 u_x + u_xxx = 0 on a periodic truncation of the line,
solved by iterating the Duhamel integral operator with a-priori step
sizes, iteration counts, and error bounds from explicit contraction
inequalities, plus an independent IFRK4 reference oracle.
"""

from .errors import (
    BlowUpError,
    GardnerCertError,
    NonFiniteSampleError,
    NonlinearOverflowError,
    NormCapError,
    PicardDivergenceError,
    ProfileFileError,
    QuadratureNodeError,
    SolitonConstructionError,
    SpectralSymmetryError,
    StepSelectionError,
    UsageError,
)
from .grid import (
    GridSpec,
    RealGridFunction,
    SobolevIndex,
    SpectralFunction,
    airy_propagator,
    dealias_cubic,
    forward,
    grid_l2_norm,
    inverse,
    sobolev_norm,
    spectral_derivative,
)
from .oracle import (
    SolitonParams,
    gardner_soliton,
    ifrk4_solve,
    invariant_mass,
    invariant_momentum,
    stationary_residual,
)
from .picard import (
    IterationReport,
    TimeSlab,
    duhamel_integral,
    duhamel_operator,
    free_slab,
    nonlinearity,
    picard_solve,
    required_iterations,
)
from .stepping import (
    ErrorLedger,
    SolveResult,
    StepPlan,
    choose_step,
    contraction_coefficient,
    contraction_condition,
    march_forward,
    reflect,
    solve_ivp,
    stability_condition,
)

__version__ = "0.1.0"
