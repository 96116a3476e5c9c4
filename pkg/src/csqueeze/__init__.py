"""Controlled-squeeze gates and squeezed-superposition encoding of a qubit in a resonator."""

__version__ = "0.1.0"

from .errors import CSqueezeError
from .hilbert import HilbertLayout, OperatorMatrix, QuantumState, fock, wigner_grid
from .model import PhysicalParams, derive, validate_regimes
from .protocol import (
    BlochPoint,
    average_fidelity_exact,
    bloch_sweep,
    chi_states,
    compensated_encode,
    optimize_compensation_angle,
)

__all__ = [
    "__version__",
    "CSqueezeError",
    "HilbertLayout",
    "OperatorMatrix",
    "QuantumState",
    "fock",
    "wigner_grid",
    "PhysicalParams",
    "derive",
    "validate_regimes",
    "BlochPoint",
    "average_fidelity_exact",
    "bloch_sweep",
    "chi_states",
    "compensated_encode",
    "optimize_compensation_angle",
]
