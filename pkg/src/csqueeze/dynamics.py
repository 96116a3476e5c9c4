"""Unitary and Lindblad time evolution on the truncated qubit-resonator space."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
import scipy.sparse as sp
from scipy.integrate import DOP853

from .errors import IntegrationError, KindMismatchError, NonPhysicalStateError
from .hilbert import (
    SIGMA_MINUS,
    SIGMA_Z,
    HilbertLayout,
    OperatorMatrix,
    QuantumState,
    annihilation,
    hermitian_exponential,
)
from .model import PhysicalParams, TimeDependentHamiltonian
from .units import thermal_occupation

__all__ = [
    "EvolutionResult",
    "LindbladSpec",
    "evolve_lindblad",
    "evolve_unitary",
    "lindblad_spec",
    "thermal_occupation",
]

LEAK_LEVELS = 10
NEGATIVE_EIGEN_LIMIT = 1e-6


@dataclass(frozen=True)
class LindbladSpec:
    """Rates [1/ns] of the five dissipators.

    The dephasing channel enters as ``dephasing_factor * kappa_phi`` times the
    standard dissipator of ``sigma_z``; the default factor 0.5 makes qubit
    coherences decay at ``kappa_phi`` from dephasing alone.
    """

    kappa1: float = 0.0
    kappa2: float = 0.0
    kappa1p: float = 0.0
    kappa2p: float = 0.0
    kappa_phi: float = 0.0
    n_th: float = 0.0
    n_th_q: float = 0.0
    dephasing_factor: float = 0.5

    def __post_init__(self):
        for name in ("kappa1", "kappa2", "kappa1p", "kappa2p", "kappa_phi", "n_th", "n_th_q", "dephasing_factor"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be a finite non-negative number, got {value!r}")

    @property
    def is_closed(self) -> bool:
        return max(self.kappa1, self.kappa2, self.kappa1p, self.kappa2p, self.kappa_phi) == 0.0

    @property
    def coherence_decay_rate(self) -> float:
        """Decay rate of the qubit off-diagonal element with no Hamiltonian."""
        return 2 * self.dephasing_factor * self.kappa_phi + 0.5 * (self.kappa1p + self.kappa2p)

    def channels(self, layout: HilbertLayout) -> list[tuple[float, sp.csr_matrix]]:
        """``(rate, L)`` pairs for the standard form ``rate (L rho L^dag - {L^dag L, rho}/2)``."""
        n = layout.resonator_dim
        out = []
        eye_r = sp.identity(n, dtype=complex, format="csr")
        if layout.is_bare_qubit:
            qubit_embed = lambda m: sp.csr_matrix(m)  # noqa: E731
        else:
            qubit_embed = lambda m: sp.kron(sp.csr_matrix(m), eye_r, format="csr")  # noqa: E731
        if not layout.is_bare_qubit:
            a = sp.csr_matrix(annihilation(n).data)
            if layout.has_qubit:
                a = sp.kron(sp.identity(2, dtype=complex), a, format="csr")
            out += [(self.kappa1, a), (self.kappa2, a.conj().T.tocsr())]
        if layout.has_qubit:
            sm = qubit_embed(SIGMA_MINUS)
            out += [
                (self.kappa1p, sm),
                (self.kappa2p, sm.conj().T.tocsr()),
                (self.dephasing_factor * self.kappa_phi, qubit_embed(SIGMA_Z)),
            ]
        return [(g, L) for g, L in out if g > 0]


def lindblad_spec(params: PhysicalParams, dephasing_factor: float = 0.5) -> LindbladSpec:
    """Thermal rates from lifetimes, temperature and the two mode frequencies."""
    n_r = thermal_occupation(params.omega, params.temperature)
    n_q = thermal_occupation(params.omega_q, params.temperature)
    kr = 1.0 / params.tau_r
    kq = 1.0 / params.tau_q
    return LindbladSpec(
        kappa1=(n_r + 1) * kr,
        kappa2=n_r * kr,
        kappa1p=(n_q + 1) * kq,
        kappa2p=n_q * kq,
        kappa_phi=1.0 / params.tau_phi,
        n_th=n_r,
        n_th_q=n_q,
        dephasing_factor=dephasing_factor,
    )


@dataclass(frozen=True)
class EvolutionResult:
    final_state: QuantumState
    steps: int
    max_trace_drift: float
    max_leakage: float
    diagnostics: dict = field(default_factory=dict)


def _leak_slice(layout: HilbertLayout) -> int:
    # top LEAK_LEVELS Fock levels, or a quarter of a small truncation
    return min(LEAK_LEVELS, max(1, layout.resonator_dim // 4))


def _leakage(populations: np.ndarray, layout: HilbertLayout) -> float:
    if layout.is_bare_qubit:
        return 0.0
    per_level = populations.reshape(-1, layout.resonator_dim).sum(axis=0)
    return float(per_level[-_leak_slice(layout):].sum())


def _run_solver(solver, on_step: Callable[[np.ndarray], None], what: str) -> int:
    steps = 0
    while solver.status == "running":
        message = solver.step()
        if solver.status == "failed":
            raise IntegrationError(
                f"{what}: integrator failed at t={solver.t:.6g} ns after {steps} steps ({message})"
            )
        steps += 1
        on_step(solver.y)
    return steps


Hamiltonian = Union[OperatorMatrix, TimeDependentHamiltonian, Callable[[float], np.ndarray]]


def evolve_unitary(
    hamiltonian: Hamiltonian,
    state: QuantumState,
    duration: float,
    tol: float = 1e-9,
) -> EvolutionResult:
    """Schroedinger evolution of a pure state.

    A constant ``OperatorMatrix`` is propagated exactly through its
    eigendecomposition; anything time dependent goes through adaptive DOP853
    with relative tolerance ``tol``.
    """
    if state.kind != "pure":
        raise KindMismatchError("evolve_unitary needs a pure state")
    if duration < 0:
        raise ValueError("duration must be non-negative")
    layout = state.layout
    if isinstance(hamiltonian, OperatorMatrix):
        if hamiltonian.layout != layout:
            raise KindMismatchError("Hamiltonian and state layouts differ")
        psi = hermitian_exponential(hamiltonian, duration).data @ state.data
        drift = abs(np.vdot(psi, psi).real - 1.0)
        psi = psi / np.linalg.norm(psi)
        leak = max(_leakage(np.abs(state.data) ** 2, layout), _leakage(np.abs(psi) ** 2, layout))
        return EvolutionResult(QuantumState(layout, psi), 1, drift, leak, {"method": "eigh"})

    if isinstance(hamiltonian, TimeDependentHamiltonian):
        h0 = sp.csr_matrix(hamiltonian.constant)
        terms = [(sp.csr_matrix(op), c) for op, c in hamiltonian.terms]

        def rhs(t, y):
            out = h0 @ y
            for op, c in terms:
                out = out + c(t) * (op @ y)
            return -1j * out
    else:
        func = hamiltonian

        def rhs(t, y):
            return -1j * (func(t) @ y)

    track = {"drift": 0.0, "leak": _leakage(np.abs(state.data) ** 2, layout)}

    def on_step(y):
        pops = np.abs(y) ** 2
        track["drift"] = max(track["drift"], abs(pops.sum() - 1.0))
        track["leak"] = max(track["leak"], _leakage(pops, layout))

    y0 = np.array(state.data, dtype=complex)
    if duration == 0:
        return EvolutionResult(state, 0, 0.0, track["leak"], {"method": "none"})
    solver = DOP853(rhs, 0.0, y0, duration, rtol=tol, atol=tol * 1e-3)
    steps = _run_solver(solver, on_step, "evolve_unitary")
    psi = solver.y / np.linalg.norm(solver.y)
    return EvolutionResult(
        QuantumState(layout, psi), steps, track["drift"], track["leak"], {"method": "DOP853", "nfev": solver.nfev}
    )


def _physical_density(rho: np.ndarray, layout: HilbertLayout, diagnostics: dict) -> QuantumState:
    herm = float(np.abs(rho - rho.conj().T).max())
    rho = 0.5 * (rho + rho.conj().T)
    w, v = np.linalg.eigh(rho)
    lowest = float(w.min())
    diagnostics["hermiticity_error"] = herm
    diagnostics["min_eigenvalue"] = lowest
    if lowest < -NEGATIVE_EIGEN_LIMIT:
        raise NonPhysicalStateError(f"density matrix has eigenvalue {lowest:.3e} < -{NEGATIVE_EIGEN_LIMIT:g}")
    if lowest < 0:
        # integration noise: drop the negative part, keep the record
        w = np.clip(w, 0.0, None)
        rho = (v * w) @ v.conj().T
        diagnostics["clipped_weight"] = float(-lowest)
    rho = rho / np.trace(rho).real
    return QuantumState(layout, 0.5 * (rho + rho.conj().T))


def evolve_lindblad(
    hamiltonian: OperatorMatrix,
    spec: LindbladSpec,
    rho0: QuantumState,
    duration: float,
    tol: float = 1e-9,
    max_trace_drift: float = 1e-8,
) -> EvolutionResult:
    """Integrate ``d rho/dt = -i[H, rho] + sum_k g_k D[L_k] rho`` for constant ``H``.

    The state is carried in the interaction picture of ``diag(H)``, which takes
    the fast detuning phases out of the integrator; only the off-diagonal part
    of ``H`` and the dissipators drive the stepping. Rates are applied on
    whatever subsystems ``rho0.layout`` contains.
    """
    if rho0.kind != "mixed":
        raise KindMismatchError("evolve_lindblad needs a density matrix; call to_mixed() first")
    if hamiltonian.layout != rho0.layout:
        raise KindMismatchError("Hamiltonian and state layouts differ")
    if duration < 0:
        raise ValueError("duration must be non-negative")
    layout = rho0.layout
    d = layout.dim
    h = hamiltonian.data
    energies = np.diag(h).real.copy()
    h_off = h - np.diag(energies)
    channels = spec.channels(layout)
    k_sum = sp.csr_matrix((d, d), dtype=complex)
    for g, L in channels:
        k_sum = k_sum + g * (L.conj().T @ L)
    h_eff = sp.csr_matrix(h_off) - 0.5j * k_sum
    # right multiplication by X^dag is done as (X^* rho^T)^T to stay sparse-on-the-left
    h_eff_conj = h_eff.conj().tocsr()
    jumps = [(g, L, L.conj().tocsr()) for g, L in channels]
    gaps = energies[:, None] - energies[None, :]
    has_coherent = bool(np.abs(h_off).max() > 0)

    def rhs(t, y):
        phase = np.exp(-1j * gaps * t)
        rho = y.reshape(d, d) * phase
        out = -1j * (h_eff @ rho - (h_eff_conj @ rho.T).T)
        for g, L, l_conj in jumps:
            out += g * (L @ (l_conj @ rho.T).T)
        return (out / phase).ravel()

    diag_idx = np.arange(d) * (d + 1)
    track = {"drift": 0.0, "leak": _leakage(np.diag(rho0.data).real, layout)}

    def on_step(y):
        pops = y[diag_idx].real
        track["drift"] = max(track["drift"], abs(pops.sum() - 1.0))
        track["leak"] = max(track["leak"], _leakage(pops, layout))

    diagnostics = {
        "method": "DOP853 interaction picture",
        "coherence_decay_rate": spec.coherence_decay_rate,
        "channels": len(channels),
    }
    if duration == 0 or (not channels and not has_coherent):
        rho = rho0.data * np.exp(-1j * gaps * duration)
        diagnostics["nfev"] = 0
        final = _physical_density(np.array(rho), layout, diagnostics)
        return EvolutionResult(final, 0, 0.0, track["leak"], diagnostics)

    solver = DOP853(rhs, 0.0, np.array(rho0.data, dtype=complex).ravel(), duration, rtol=tol, atol=tol * 1e-2)
    steps = _run_solver(solver, on_step, "evolve_lindblad")
    diagnostics["nfev"] = solver.nfev
    if track["drift"] > max_trace_drift:
        raise IntegrationError(
            f"evolve_lindblad: trace drift {track['drift']:.3e} exceeds {max_trace_drift:.1e}"
        )
    rho = solver.y.reshape(d, d) * np.exp(-1j * gaps * duration)
    final = _physical_density(rho, layout, diagnostics)
    return EvolutionResult(final, steps, track["drift"], track["leak"], diagnostics)
