"""Spectral tools for time-periodic solutions of u_tt - u_xx + f(x, u) = 0.

The box Q = [0, pi] x [0, 2 pi] is periodic in both variables.  Fields are
Fourier tables on the ball 2|j| + |k| <= m; the kernel of the wave operator
(characteristic modes k = +-2j) is handled by a penalty continued to zero.
"""
__version__ = "0.1.0"

from .errors import (
    BoxtorusError,
    CharacteristicDataError,
    DomainError,
    NonConvergenceError,
    RealnessError,
    TruncationError,
)
from .lattice import (
    Decomposition,
    FourierField,
    GridField,
    ModeIndex,
    analyze,
    decompose,
    project,
    random_field,
    synthesize,
    translate,
    truncate,
)
from .model import Nonlinearity, PenalizedResidual, energy_identity, functional_value, residual
from .solver import ContinuationSchedule, SolutionRecord, align_time_shift, continue_beta, multi_start, newton_solve

__all__ = [
    "BoxtorusError", "CharacteristicDataError", "DomainError", "NonConvergenceError", "RealnessError",
    "TruncationError", "Decomposition", "FourierField", "GridField", "ModeIndex", "analyze", "decompose",
    "project", "random_field", "synthesize", "translate", "truncate", "Nonlinearity", "PenalizedResidual",
    "energy_identity", "functional_value", "residual", "ContinuationSchedule", "SolutionRecord",
    "align_time_shift", "continue_beta", "multi_start", "newton_solve",
]
