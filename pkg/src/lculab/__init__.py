"""Desk-scale simulator and verification lab for thermal-state preparation and
Markov-chain hitting-time estimation built on linear combinations of unitaries."""

from .constants import DEFAULT_CONSTANTS, Constants
from .errors import (
    AnnihilationError,
    CalibrationError,
    LculabError,
    PreconditionWarning,
    SingularityError,
    ValidationError,
    WalkTimeoutError,
)
from .gap_amplification import build_tilde_h, parse_pauli_lines, psd_split
from .gibbs import GibbsTask, calibrate_hs_grid, prepare_gibbs
from .inverse import (
    HittingTimeTask,
    amplitude_estimation,
    calibrate_inverse_grid,
    estimate_hitting_time,
)
from .markov import discriminant_pair, mark_states, validate_chain
from .operators import HermitianOperator, StateVector, trace_distance

__version__ = "0.1.0"

__all__ = [
    "Constants",
    "DEFAULT_CONSTANTS",
    "LculabError",
    "ValidationError",
    "SingularityError",
    "AnnihilationError",
    "CalibrationError",
    "WalkTimeoutError",
    "PreconditionWarning",
    "HermitianOperator",
    "StateVector",
    "trace_distance",
    "build_tilde_h",
    "psd_split",
    "parse_pauli_lines",
    "GibbsTask",
    "calibrate_hs_grid",
    "prepare_gibbs",
    "validate_chain",
    "mark_states",
    "discriminant_pair",
    "HittingTimeTask",
    "calibrate_inverse_grid",
    "estimate_hitting_time",
    "amplitude_estimation",
    "__version__",
]
