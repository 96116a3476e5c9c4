"""Dense linear algebra on a truncated qubit-resonator Hilbert space.

Ordering convention: whenever a qubit is present the joint space is
``qubit (x) resonator`` with the qubit as the slow (major) index, so the
joint basis vector ``|q, n>`` sits at index ``q * N + n``.

The qubit basis follows ``sigma_z = |0><0| - |1><1|``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
import scipy.linalg

from .errors import (
    InvalidDimensionError,
    InvalidStateError,
    KindMismatchError,
    LayoutMismatchError,
)

PURE_NORM_TOL = 1e-10
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
EIGEN_TOL = 1e-10


def _frozen(array: np.ndarray) -> np.ndarray:
    out = np.array(array, dtype=complex, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class HilbertLayout:
    """Shape of the space: a Fock truncation plus an optional qubit factor.

    ``HilbertLayout(1, True)`` is the bare qubit; it exists so that qubit
    factors and reduced qubit states can be expressed with the same types.
    """

    resonator_dim: int
    has_qubit: bool = True

    def __post_init__(self):
        if int(self.resonator_dim) != self.resonator_dim:
            raise InvalidDimensionError("resonator_dim must be an integer")
        if self.resonator_dim < 2 and not (self.resonator_dim == 1 and self.has_qubit):
            raise InvalidDimensionError(
                f"resonator_dim must be >= 2, got {self.resonator_dim}"
            )

    @classmethod
    def qubit(cls) -> HilbertLayout:
        return cls(1, True)

    @property
    def is_bare_qubit(self) -> bool:
        return self.resonator_dim == 1

    @property
    def dim(self) -> int:
        return self.resonator_dim * (2 if self.has_qubit else 1)


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Pure state vector or density matrix over ``layout``."""

    layout: HilbertLayout
    data: np.ndarray

    def __post_init__(self):
        data = _frozen(self.data)
        object.__setattr__(self, "data", data)
        d = self.layout.dim
        if data.ndim == 1:
            if data.shape != (d,):
                raise LayoutMismatchError(f"vector of length {data.shape[0]} != {d}")
            norm = np.linalg.norm(data)
            if abs(norm - 1.0) > PURE_NORM_TOL:
                raise InvalidStateError(f"state norm {norm!r} differs from 1")
        elif data.ndim == 2:
            if data.shape != (d, d):
                raise LayoutMismatchError(f"matrix shape {data.shape} != {(d, d)}")
            herm = np.abs(data - data.conj().T).max()
            if herm > HERMITIAN_TOL:
                raise InvalidStateError(f"density matrix not Hermitian ({herm:.2e})")
            tr = np.trace(data).real
            if abs(tr - 1.0) > TRACE_TOL:
                raise InvalidStateError(f"density matrix trace {tr!r} differs from 1")
            lowest = np.linalg.eigvalsh(data).min()
            if lowest < -EIGEN_TOL:
                raise InvalidStateError(f"negative eigenvalue {lowest:.3e}")
        else:
            raise InvalidStateError("state data must be a vector or a square matrix")

    @property
    def kind(self) -> Literal["pure", "mixed"]:
        return "pure" if self.data.ndim == 1 else "mixed"

    def to_mixed(self) -> QuantumState:
        if self.kind == "mixed":
            return self
        return QuantumState(self.layout, np.outer(self.data, self.data.conj()))

    def density_matrix(self) -> np.ndarray:
        return self.to_mixed().data

    def expect(self, op: OperatorMatrix) -> complex:
        _check_layouts(self.layout, op.layout)
        if self.kind == "pure":
            return complex(np.vdot(self.data, op.data @ self.data))
        return complex(np.trace(op.data @ self.data))

    def populations(self) -> np.ndarray:
        """Resonator Fock-level populations (qubit traced out)."""
        if self.kind == "pure":
            probs = np.abs(self.data) ** 2
        else:
            probs = np.diag(self.data).real
        return probs.reshape(-1, self.layout.resonator_dim).sum(axis=0)


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense complex operator acting on ``layout``."""

    layout: HilbertLayout
    data: np.ndarray

    def __post_init__(self):
        data = _frozen(self.data)
        object.__setattr__(self, "data", data)
        d = self.layout.dim
        if data.shape != (d, d):
            raise LayoutMismatchError(f"operator shape {data.shape} != {(d, d)}")

    def dag(self) -> OperatorMatrix:
        return OperatorMatrix(self.layout, self.data.conj().T)

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            _check_layouts(self.layout, other.layout)
            return OperatorMatrix(self.layout, self.data @ other.data)
        return NotImplemented

    def __add__(self, other):
        if isinstance(other, OperatorMatrix):
            _check_layouts(self.layout, other.layout)
            return OperatorMatrix(self.layout, self.data + other.data)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, OperatorMatrix):
            _check_layouts(self.layout, other.layout)
            return OperatorMatrix(self.layout, self.data - other.data)
        return NotImplemented

    def __mul__(self, scalar):
        if np.isscalar(scalar):
            return OperatorMatrix(self.layout, self.data * scalar)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return OperatorMatrix(self.layout, -self.data)

    def apply(self, state: QuantumState) -> QuantumState:
        """``U|psi>`` for pure states, ``U rho U^dagger`` for mixed ones."""
        _check_layouts(self.layout, state.layout)
        if state.kind == "pure":
            return QuantumState(self.layout, self.data @ state.data)
        return QuantumState(self.layout, self.data @ state.data @ self.data.conj().T)

    def hermiticity_error(self) -> float:
        return float(np.abs(self.data - self.data.conj().T).max())

    def unitarity_error(self) -> float:
        d = self.data
        return float(np.abs(d.conj().T @ d - np.eye(d.shape[0])).max())


def _check_layouts(a: HilbertLayout, b: HilbertLayout) -> None:
    if a != b:
        raise LayoutMismatchError(f"layout mismatch: {a} vs {b}")


def resonator_layout(dim: int) -> HilbertLayout:
    return HilbertLayout(dim, has_qubit=False)


def annihilation(dim: int) -> OperatorMatrix:
    """Truncated bosonic annihilation operator, ``<n-1|a|n> = sqrt(n)``."""
    if int(dim) != dim or dim < 2:
        raise InvalidDimensionError(f"annihilation operator needs dim >= 2, got {dim}")
    return OperatorMatrix(
        resonator_layout(dim), np.diag(np.sqrt(np.arange(1, dim)), 1)
    )


def creation(dim: int) -> OperatorMatrix:
    return annihilation(dim).dag()


def number(dim: int) -> OperatorMatrix:
    if dim < 2:
        raise InvalidDimensionError(f"number operator needs dim >= 2, got {dim}")
    return OperatorMatrix(resonator_layout(dim), np.diag(np.arange(dim, dtype=float)))


def identity(layout: HilbertLayout) -> OperatorMatrix:
    return OperatorMatrix(layout, np.eye(layout.dim))


def qubit_operator(matrix) -> OperatorMatrix:
    return OperatorMatrix(HilbertLayout.qubit(), np.asarray(matrix, dtype=complex))


SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)
# |0> is the upper (excited) level of sigma_z, so the lowering operator is |1><0|.
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)
SIGMA_PLUS = SIGMA_MINUS.conj().T
PROJ_0 = np.diag([1.0, 0.0]).astype(complex)
PROJ_1 = np.diag([0.0, 1.0]).astype(complex)


def fock(dim: int, n: int) -> QuantumState:
    if not 0 <= n < dim:
        raise InvalidDimensionError(f"Fock level {n} outside truncation {dim}")
    vec = np.zeros(dim, dtype=complex)
    vec[n] = 1.0
    return QuantumState(resonator_layout(dim), vec)


def qubit_state(alpha: complex, beta: complex) -> QuantumState:
    return QuantumState(HilbertLayout.qubit(), np.array([alpha, beta], dtype=complex))


def tensor(a, b):
    """Kronecker product ``a (x) b`` with the qubit factor ``a`` first.

    Both factors must be of the same kind (two operators or two states).
    A pure and a mixed state are combined as density matrices.
    """
    if isinstance(a, OperatorMatrix) != isinstance(b, OperatorMatrix):
        raise KindMismatchError("cannot tensor a state with an operator")
    if not isinstance(a, (OperatorMatrix, QuantumState)):
        raise KindMismatchError(f"unsupported operand {type(a).__name__}")
    if not (a.layout.is_bare_qubit and not b.layout.has_qubit):
        raise LayoutMismatchError("tensor expects a bare-qubit factor then a resonator factor")
    layout = HilbertLayout(b.layout.resonator_dim, has_qubit=True)
    if isinstance(a, OperatorMatrix):
        return OperatorMatrix(layout, np.kron(a.data, b.data))
    if a.kind == b.kind == "pure":
        return QuantumState(layout, np.kron(a.data, b.data))
    return QuantumState(layout, np.kron(a.density_matrix(), b.density_matrix()))


def embed_resonator(op: OperatorMatrix) -> OperatorMatrix:
    """``1_qubit (x) op``."""
    return tensor(qubit_operator(np.eye(2)), op)


def embed_qubit(matrix, dim: int) -> OperatorMatrix:
    """``matrix (x) 1_resonator``."""
    return tensor(qubit_operator(matrix), identity(resonator_layout(dim)))


def partial_trace(rho: QuantumState, keep: Literal["qubit", "resonator"]) -> QuantumState:
    if rho.kind != "mixed":
        raise KindMismatchError("partial_trace needs a density matrix; call to_mixed() first")
    if not rho.layout.has_qubit or rho.layout.is_bare_qubit:
        raise LayoutMismatchError("partial_trace needs a joint qubit-resonator layout")
    n = rho.layout.resonator_dim
    blocks = rho.data.reshape(2, n, 2, n)
    if keep == "resonator":
        reduced = np.einsum("iaib->ab", blocks)
        layout = resonator_layout(n)
    elif keep == "qubit":
        reduced = np.einsum("iaja->ij", blocks)
        layout = HilbertLayout.qubit()
    else:
        raise ValueError(f"keep must be 'qubit' or 'resonator', got {keep!r}")
    return QuantumState(layout, 0.5 * (reduced + reduced.conj().T))


def fidelity(target: QuantumState, state: QuantumState) -> float:
    """Overlap of a pure target with a pure or mixed state."""
    if target.kind != "pure":
        raise KindMismatchError("fidelity target must be a pure state")
    _check_layouts(target.layout, state.layout)
    t = target.data
    if state.kind == "pure":
        value = abs(np.vdot(t, state.data)) ** 2
    else:
        value = np.vdot(t, state.data @ t).real
    return float(min(max(value, 0.0), 1.0))


def purity(rho: QuantumState) -> float:
    if rho.kind == "pure":
        return 1.0
    return float(np.einsum("ij,ji->", rho.data, rho.data).real)


def operator_exponential(op: OperatorMatrix, scale: complex = 1.0) -> OperatorMatrix:
    """``exp(scale * op)`` by scaling and squaring."""
    arg = op.data * scale
    if not np.all(np.isfinite(arg)):
        raise ValueError("operator_exponential: non-finite entries")
    return OperatorMatrix(op.layout, scipy.linalg.expm(arg))


def hermitian_exponential(h: OperatorMatrix, t: float) -> OperatorMatrix:
    """``exp(-i t h)`` for Hermitian ``h`` via eigendecomposition (exactly unitary)."""
    herm = h.hermiticity_error()
    scale = max(1.0, float(np.abs(h.data).max()))
    if herm > 1e-10 * scale:
        raise ValueError(f"hermitian_exponential: generator not Hermitian ({herm:.2e})")
    w, v = np.linalg.eigh(0.5 * (h.data + h.data.conj().T))
    return OperatorMatrix(h.layout, (v * np.exp(-1j * t * w)) @ v.conj().T)


def wigner_grid(state: QuantumState, xs, ps) -> np.ndarray:
    """Wigner function ``W[i, j] = W(x=xs[j], p=ps[i])`` of a resonator state.

    Quadratures are ``x = (a + a^dag)/sqrt(2)`` and ``p = (a - a^dag)/(i sqrt(2))``,
    so the vacuum is ``exp(-x^2 - p^2) / pi``. Uses the Laguerre recursion over
    Fock matrix elements, restricted to the populated block of ``rho``.
    """
    if state.layout.has_qubit:
        raise LayoutMismatchError("wigner_grid needs a resonator-only state; trace out the qubit first")
    rho = state.density_matrix()
    weight = np.abs(rho).max(axis=0) + np.abs(rho).max(axis=1)
    (support,) = np.nonzero(weight > 1e-14)
    m_max = int(support.max()) + 1 if support.size else 1
    rho = rho[:m_max, :m_max]

    x, p = np.meshgrid(np.asarray(xs, float), np.asarray(ps, float))
    alpha = (x + 1j * p) / np.sqrt(2.0)
    two_alpha = 2.0 * alpha
    two_alpha_c = two_alpha.conj()

    # column[n] holds the basis function for |m><n| at the current row m
    column = [np.exp(-2.0 * np.abs(alpha) ** 2) / np.pi]
    total = rho[0, 0].real * column[0]
    for n in range(1, m_max):
        column.append(two_alpha * column[n - 1] / np.sqrt(n))
        total = total + 2.0 * np.real(rho[0, n] * column[n])
    for m in range(1, m_max):
        previous = column[m]
        column[m] = (two_alpha_c * previous - np.sqrt(m) * column[m - 1]) / np.sqrt(m)
        total = total + rho[m, m].real * column[m].real
        for n in range(m + 1, m_max):
            updated = (two_alpha * column[n - 1] - np.sqrt(m) * previous) / np.sqrt(n)
            previous = column[n]
            column[n] = updated
            total = total + 2.0 * np.real(rho[m, n] * column[n])
    return np.asarray(total.real)
