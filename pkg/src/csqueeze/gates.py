"""Gaussian gates on the truncated resonator and the controlled-squeeze gate."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import LayoutMismatchError, TruncationError
from .hilbert import (
    PROJ_0,
    PROJ_1,
    HilbertLayout,
    OperatorMatrix,
    annihilation,
    hermitian_exponential,
    qubit_operator,
    resonator_layout,
    tensor,
)


class TruncationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SqueezeParams:
    """Squeezing magnitude ``r`` (signed) and angle ``theta``.

    ``theta`` is kept unreduced so protocol bookkeeping such as
    ``theta + 2*phi`` survives; use ``theta_reduced`` for display.
    """

    r: float
    theta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.r) and math.isfinite(self.theta)):
            raise ValueError("squeeze parameters must be finite")

    @property
    def theta_reduced(self) -> float:
        return self.theta % (2 * np.pi)


@dataclass(frozen=True)
class ControlledGateParams:
    squeeze: SqueezeParams
    phi: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.phi):
            raise ValueError("rotation angle must be finite")


def _check_occupation(mean_n: float, dim: int, what: str) -> None:
    if mean_n > dim / 3:
        raise TruncationError(
            f"{what}: mean photon number {mean_n:.3g} exceeds dim/3 = {dim / 3:.3g}"
        )
    if mean_n > dim / 6:
        warnings.warn(
            f"{what}: mean photon number {mean_n:.3g} exceeds dim/6; expect truncation error",
            TruncationWarning,
            stacklevel=3,
        )


def squeeze_generator(theta: float, dim: int) -> np.ndarray:
    """``(e^{-i theta} a^2 - e^{i theta} a^dag^2) / 2`` as a dense array."""
    a = annihilation(dim).data
    a2 = a @ a
    return 0.5 * (np.exp(-1j * theta) * a2 - np.exp(1j * theta) * a2.conj().T)


def squeeze(params: SqueezeParams, dim: int) -> OperatorMatrix:
    """``S(r, theta) = exp(r/2 (e^{-i theta} a^2 - e^{i theta} a^dag^2))``."""
    _check_occupation(math.sinh(params.r) ** 2, dim, "squeeze")
    # S = exp(r G) with G anti-Hermitian, i.e. exp(-i r (iG))
    gen = OperatorMatrix(resonator_layout(dim), 1j * squeeze_generator(params.theta, dim))
    return hermitian_exponential(gen, params.r)


def displace(gamma: complex, dim: int) -> OperatorMatrix:
    """``D(gamma) = exp(gamma a^dag - gamma^* a)``."""
    _check_occupation(abs(gamma) ** 2, dim, "displace")
    a = annihilation(dim)
    gen = a.dag() * complex(gamma) - a * complex(np.conj(gamma))
    return hermitian_exponential(gen * 1j, 1.0)


def rotation(phi: float, dim: int) -> OperatorMatrix:
    """``exp(-i phi a^dag a)``, built directly on the diagonal."""
    return OperatorMatrix(resonator_layout(dim), np.diag(np.exp(-1j * phi * np.arange(dim))))


def conjugated_displacement(gamma: complex, sq: SqueezeParams) -> complex:
    """``gamma'`` such that ``S D(gamma) S^dag = D(gamma')``."""
    return complex(
        gamma * math.cosh(sq.r) - np.conj(gamma) * np.exp(1j * sq.theta) * math.sinh(sq.r)
    )


def _require_qubit(layout: HilbertLayout) -> None:
    if not layout.has_qubit or layout.is_bare_qubit:
        raise LayoutMismatchError("gate needs a joint qubit-resonator layout")


def controlled_squeeze(params: ControlledGateParams, layout: HilbertLayout) -> OperatorMatrix:
    """``|1><1| (x) S(r, theta) + |0><0| (x) R(phi)``."""
    _require_qubit(layout)
    dim = layout.resonator_dim
    s = squeeze(params.squeeze, dim)
    u0 = rotation(params.phi, dim)
    return tensor(qubit_operator(PROJ_1), s) + tensor(qubit_operator(PROJ_0), u0)


def controlled_displacement(gamma: complex, layout: HilbertLayout, phase: float = 0.0) -> OperatorMatrix:
    """``|1><1| (x) e^{i phase} D(gamma) + |0><0| (x) 1``."""
    _require_qubit(layout)
    dim = layout.resonator_dim
    d = displace(gamma, dim) * np.exp(1j * phase)
    return tensor(qubit_operator(PROJ_1), d) + tensor(qubit_operator(PROJ_0), rotation(0.0, dim))


_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_PI_ROTATION = np.array([[0, 1], [1, 0]], dtype=complex)


def qubit_gate(
    kind: Literal["hadamard", "pi_rotation", "sigma_z_measurement_projectors"],
    layout: HilbertLayout,
):
    """Ideal instantaneous qubit operation lifted to ``layout``.

    ``sigma_z_measurement_projectors`` returns the pair
    ``(|0><0| (x) 1, |1><1| (x) 1)``.
    """
    _require_qubit(layout)
    eye = OperatorMatrix(resonator_layout(layout.resonator_dim), np.eye(layout.resonator_dim))
    if kind == "hadamard":
        return tensor(qubit_operator(_HADAMARD), eye)
    if kind == "pi_rotation":
        return tensor(qubit_operator(_PI_ROTATION), eye)
    if kind == "sigma_z_measurement_projectors":
        return tensor(qubit_operator(PROJ_0), eye), tensor(qubit_operator(PROJ_1), eye)
    raise ValueError(f"unknown qubit gate {kind!r}")


def identity_work_dim(r: float, dim: int) -> int:
    """Work-space size at which the first ``dim`` levels of a truncated squeeze are converged."""
    return int(dim * (2 + 1.5 * math.exp(2 * abs(r))))


def conjugation_residual(gamma: complex, sq: SqueezeParams, dim: int = 60, work_dim: int | None = None) -> float:
    """Max-entry error of ``S D(gamma) S^dag - D(gamma')`` on the first ``dim`` levels.

    Products are formed in a larger ``work_dim`` space so the comparison
    measures the identity itself rather than the edge of the truncation
    (the truncated squeeze is only accurate well below the cutoff).
    """
    work = work_dim or identity_work_dim(sq.r, dim)
    gp = conjugated_displacement(gamma, sq)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        s = squeeze(sq, work).data
        lhs = s @ displace(gamma, work).data @ s.conj().T
        rhs = displace(gp, work).data
    return float(np.abs(lhs[:dim, :dim] - rhs[:dim, :dim]).max())


def controlled_conjugation_residual(gamma: complex, sq: SqueezeParams, dim: int = 60, work_dim: int | None = None) -> float:
    """Error of ``D(gamma)^-1 CSqz D(gamma) CSqz^-1`` against a controlled displacement.

    The |1> branch must equal ``e^{i Im(gamma^* gamma')} D(gamma' - gamma)`` and the
    |0> branch the identity (rotation angle zero). All four operators are block
    diagonal in the qubit basis, so the blocks are checked separately.
    """
    work = work_dim or identity_work_dim(sq.r, dim)
    gp = conjugated_displacement(gamma, sq)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        layout = HilbertLayout(work, True)
        c = controlled_squeeze(ControlledGateParams(sq, 0.0), layout).data
        d = displace(gamma, work).data
        phase = float(np.imag(np.conj(gamma) * gp))
        target = controlled_displacement(gp - gamma, layout, phase).data
    err = 0.0
    for q in (0, 1):
        blk = slice(q * work, (q + 1) * work)
        lhs = d.conj().T @ c[blk, blk] @ d @ c[blk, blk].conj().T
        err = max(err, float(np.abs(lhs[:dim, :dim] - target[blk, blk][:dim, :dim]).max()))
    off = np.abs(c[:work, work:]).max() + np.abs(c[work:, :work]).max()
    return max(err, float(off))
