"""Physical parameters, Hamiltonians and regime checks for the driven qubit-resonator system.

Frames used here:

* lab frame: ``(w_q/2) sz + w n + chi n sz + g_d eps sin(w_d t - theta_lab) (a + a^dag)^2``
* rotating frame at ``w1 = w - chi`` for the resonator (and the bare qubit
  frequency for the qubit), drive kept in full: see ``rotating_frame_hamiltonian``
* RWA frame: the same with counter-rotating drive terms dropped.

In the RWA frame the squeeze term is written with ``theta`` such that the
|1> branch evolves as ``S(g_d eps t, theta)``. Expanding the lab-frame drive
gives that form with ``theta = theta_lab + pi``; ``PhysicalParams.theta`` is the
RWA-frame angle and ``lab_theta`` converts.

``chi`` follows the sign of ``sz = |0><0| - |1><1|``: the qubit in |0> shifts the
resonator up to ``w + chi`` and in |1> down to ``w - chi``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .errors import InconsistentParametersError
from .hilbert import (
    PROJ_0,
    PROJ_1,
    SIGMA_Z,
    HilbertLayout,
    OperatorMatrix,
    annihilation,
)
from .units import thermal_occupation

TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class PhysicalParams:
    """Experimental parameter record. Frequencies in rad/ns, times in ns, temperature in K."""

    omega: float = TWO_PI * 6.0
    omega_q: float = TWO_PI * 4.0
    chi: float = TWO_PI * 0.008
    # an angular rate: 50 Mrad/s, no factor 2*pi
    g_d: float = 0.05
    epsilon: float = 0.15
    theta: float = 0.0
    omega_d: float | None = None
    gate_time: float = 200.0
    temperature: float = 0.06
    tau_r: float = 2e5
    tau_q: float = 2e5
    tau_phi: float = 1e4
    resonator_dim: int = 90
    kerr: float = 0.0

    def __post_init__(self):
        if self.omega_d is None:
            object.__setattr__(self, "omega_d", 2.0 * (self.omega - self.chi))
        positive = {
            "omega": self.omega,
            "omega_q": self.omega_q,
            "chi": self.chi,
            "g_d": self.g_d,
            "omega_d": self.omega_d,
            "gate_time": self.gate_time,
            "temperature": self.temperature,
            "tau_r": self.tau_r,
            "tau_q": self.tau_q,
            "tau_phi": self.tau_phi,
        }
        for name, value in positive.items():
            if not (math.isfinite(value) and value > 0):
                raise InconsistentParametersError(f"{name} must be positive and finite, got {value!r}")
        if not 0.0 <= self.epsilon < 1.0:
            raise InconsistentParametersError(f"epsilon must lie in [0, 1), got {self.epsilon!r}")
        if not math.isfinite(self.theta) or not math.isfinite(self.kerr):
            raise InconsistentParametersError("theta and kerr must be finite")
        if int(self.resonator_dim) != self.resonator_dim or self.resonator_dim < 2:
            raise InconsistentParametersError(f"resonator_dim must be an integer >= 2, got {self.resonator_dim!r}")

    @classmethod
    def reference(cls, **overrides) -> PhysicalParams:
        """The reference operating point (6 GHz resonator, 200 ns gate, 60 mK)."""
        return cls(**overrides)

    def replace(self, **changes) -> PhysicalParams:
        values = asdict(self)
        if "omega" in changes or "chi" in changes:
            # keep the parametric-resonance default unless omega_d is given explicitly
            if "omega_d" not in changes and self.omega_d == 2.0 * (self.omega - self.chi):
                values["omega_d"] = None
        values.update(changes)
        return PhysicalParams(**values)

    @property
    def lab_theta(self) -> float:
        return self.theta - math.pi

    @property
    def layout(self) -> HilbertLayout:
        return HilbertLayout(self.resonator_dim, True)


@dataclass(frozen=True)
class DerivedQuantities:
    omega_bar_0: float
    omega_bar_1: float
    delta: float
    delta_tilde: float
    drive_strength: float
    drive_ratio: float
    r_target: float
    phi_analytic: float
    perturbative: bool

    def as_dict(self) -> dict:
        return asdict(self)


def derive(params: PhysicalParams) -> DerivedQuantities:
    w0 = params.omega + params.chi
    w1 = params.omega - params.chi
    delta = w1 - w0
    lam = params.g_d * params.epsilon
    ratio = abs(lam / delta)
    delta_tilde = delta * (1.0 - 0.5 * ratio**2)
    return DerivedQuantities(
        omega_bar_0=w0,
        omega_bar_1=w1,
        delta=delta,
        delta_tilde=delta_tilde,
        drive_strength=lam,
        drive_ratio=ratio,
        r_target=lam * params.gate_time,
        phi_analytic=abs(delta_tilde) * params.gate_time,
        perturbative=ratio < 0.2,
    )


def _resonator_ops(dim: int):
    a = annihilation(dim).data
    return a, a.conj().T, np.diag(np.arange(dim, dtype=float))


def squeeze_drive_block(strength: float, theta: float, dim: int) -> np.ndarray:
    """``(i/2) strength (e^{-i theta} a^2 - e^{i theta} a^dag^2)``."""
    a, ad, _ = _resonator_ops(dim)
    a2 = a @ a
    return 0.5j * strength * (np.exp(-1j * theta) * a2 - np.exp(1j * theta) * a2.conj().T)


def _kerr_block(params: PhysicalParams) -> np.ndarray:
    a, ad, _ = _resonator_ops(params.resonator_dim)
    return 0.5 * params.kerr * (ad @ ad @ a @ a)


def _joint(q: np.ndarray, r: np.ndarray) -> np.ndarray:
    return np.kron(q, r)


def lab_hamiltonian(params: PhysicalParams, t: float) -> OperatorMatrix:
    dim = params.resonator_dim
    a, ad, n = _resonator_ops(dim)
    eye = np.eye(dim)
    x2 = (a + ad) @ (a + ad)
    drive = params.g_d * params.epsilon * math.sin(params.omega_d * t - params.lab_theta)
    h = (
        _joint(0.5 * params.omega_q * SIGMA_Z, eye)
        + _joint(np.eye(2), params.omega * n + drive * x2 + _kerr_block(params))
        + params.chi * _joint(SIGMA_Z, n)
    )
    return OperatorMatrix(params.layout, h)


def rwa_hamiltonian(params: PhysicalParams, theta: float | None = None) -> OperatorMatrix:
    """Drive on the |1> branch only, Stark-shifted detuning on the |0> branch.

    ``exp(-i H t)`` equals ``|1><1| (x) S(g_d eps t, theta) + |0><0| (x) R(delta_tilde t)``.
    """
    d = derive(params)
    dim = params.resonator_dim
    th = params.theta if theta is None else theta
    _, _, n = _resonator_ops(dim)
    k = _kerr_block(params)
    h = _joint(PROJ_1, squeeze_drive_block(d.drive_strength, th, dim) + k) + _joint(
        PROJ_0, d.delta_tilde * n + k
    )
    return OperatorMatrix(params.layout, h)


def driven_frame_hamiltonian(params: PhysicalParams, theta: float | None = None) -> OperatorMatrix:
    """RWA Hamiltonian in the frame rotating at ``w - chi`` with the drive acting on both branches.

    The |0> branch sees the squeeze drive off resonance by ``w0 - w1 = 2 chi``;
    the Stark shift and residual squeezing of that branch come out of the
    dynamics instead of being inserted by hand.
    """
    d = derive(params)
    dim = params.resonator_dim
    th = params.theta if theta is None else theta
    _, _, n = _resonator_ops(dim)
    g = squeeze_drive_block(d.drive_strength, th, dim) + _kerr_block(params)
    h = _joint(np.eye(2), g) + _joint(PROJ_0, (d.omega_bar_0 - d.omega_bar_1) * n)
    return OperatorMatrix(params.layout, h)


def idle_hamiltonian(params: PhysicalParams, backend_frame: str = "rwa") -> OperatorMatrix:
    """Drive switched off (epsilon = 0) in the chosen frame."""
    off = params.replace(epsilon=0.0)
    if backend_frame == "rwa":
        return rwa_hamiltonian(off)
    if backend_frame == "driven":
        return driven_frame_hamiltonian(off)
    raise ValueError(f"unknown frame {backend_frame!r}")


@dataclass(frozen=True)
class TimeDependentHamiltonian:
    """``H(t) = constant + sum_k coeff_k(t) * op_k`` on a fixed layout."""

    layout: HilbertLayout
    constant: np.ndarray
    terms: tuple[tuple[np.ndarray, Callable[[float], complex]], ...] = field(default=())
    max_frequency: float = 0.0

    def __call__(self, t: float) -> np.ndarray:
        h = self.constant.copy()
        for op, coeff in self.terms:
            h = h + coeff(t) * op
        return h


def rotating_frame_hamiltonian(params: PhysicalParams, theta: float | None = None) -> TimeDependentHamiltonian:
    """Lab Hamiltonian transformed to the frame of ``w1 n + (w_q/2) sz``; no RWA.

    ``a -> a e^{-i w1 t}`` turns the drive into
    ``lam sin(w_d t - theta_lab) (a^2 e^{-2i w1 t} + a^dag^2 e^{2i w1 t} + 2n + 1)``.
    """
    d = derive(params)
    dim = params.resonator_dim
    a, ad, n = _resonator_ops(dim)
    lam = d.drive_strength
    w1 = d.omega_bar_1
    wd = params.omega_d
    th_lab = (params.theta if theta is None else theta) - math.pi
    eye2 = np.eye(2)
    constant = _joint(PROJ_0, (d.omega_bar_0 - w1) * n) + _joint(eye2, _kerr_block(params))

    def sine(t):
        return lam * math.sin(wd * t - th_lab)

    def lower(t):
        return sine(t) * np.exp(-2j * w1 * t)

    def upper(t):
        return sine(t) * np.exp(2j * w1 * t)

    terms = (
        (_joint(eye2, a @ a), lower),
        (_joint(eye2, ad @ ad), upper),
        (_joint(eye2, 2 * n + np.eye(dim)), sine),
    )
    return TimeDependentHamiltonian(
        params.layout, constant, terms, max_frequency=abs(wd) + 2 * abs(w1)
    )


def lab_hamiltonian_function(params: PhysicalParams) -> Callable[[float], np.ndarray]:
    return lambda t: lab_hamiltonian(params, t).data


@dataclass(frozen=True)
class KerrEstimates:
    k_squid_ratio: float | None
    k_qubit_ratio: float
    g_q: float
    dispersive_ratio: float


def qubit_coupling(chi: float, delta_q: float, e_cq: float) -> float:
    """Transmon coupling ``g_q`` from ``chi = -g^2 E_C / (Delta (Delta - E_C))``."""
    radicand = -chi * delta_q * (delta_q - e_cq) / e_cq
    if radicand < 0:
        raise InconsistentParametersError(
            f"negative radicand {radicand:.4g} for g_q: chi={chi:.4g}, delta_q={delta_q:.4g}, E_C={e_cq:.4g}"
        )
    return math.sqrt(radicand)


def kerr_estimates(
    params: PhysicalParams,
    geometry=None,
    flux: float | None = None,
    e_cq: float = TWO_PI * 0.15,
    delta_q: float | None = None,
    transmon_chi: float | None = None,
) -> KerrEstimates:
    """Dimensionless Kerr coefficients of the resonator mode.

    ``transmon_chi`` is the dispersive shift in the transmon sign convention
    (negative for a qubit below the resonator); it defaults to ``-|chi|``.
    ``delta_q`` defaults to ``omega_q - omega``.
    """
    dq = params.omega_q - params.omega if delta_q is None else delta_q
    chi_t = -abs(params.chi) if transmon_chi is None else transmon_chi
    g = qubit_coupling(chi_t, dq, e_cq)
    k_qubit = -0.5 * e_cq * (g / dq) ** 4 / params.omega
    k_squid = None
    if geometry is not None:
        from .squid import kerr_ratio

        k_squid = kerr_ratio(geometry, geometry.flux_bias if flux is None else flux)
    return KerrEstimates(k_squid, k_qubit, g, abs(g / dq))


@dataclass(frozen=True)
class RegimeCheck:
    check: str
    value: float
    threshold: float
    passed: bool

    def as_dict(self) -> dict:
        return asdict(self)


def validate_regimes(params: PhysicalParams, qubit_extras: dict | None = None) -> list[RegimeCheck]:
    """Report-only validity checks; never raises on a failed check."""
    d = derive(params)
    out = [
        RegimeCheck("weak_drive |g_d eps / delta|", d.drive_ratio, 0.1, d.drive_ratio < 0.1),
    ]
    if qubit_extras is not None:
        try:
            est = kerr_estimates(params, **qubit_extras)
            out.append(RegimeCheck("dispersive |g_q / delta_q|", est.dispersive_ratio, 0.1, est.dispersive_ratio < 0.1))
        except InconsistentParametersError:
            out.append(RegimeCheck("dispersive |g_q / delta_q|", float("nan"), 0.1, False))
    n_mean = math.sinh(d.r_target) ** 2
    limit = params.resonator_dim / 6
    out.append(RegimeCheck("truncation sinh^2(r)", n_mean, limit, n_mean < limit))
    n_r = thermal_occupation(params.omega, params.temperature)
    n_q = thermal_occupation(params.omega_q, params.temperature)
    out.append(RegimeCheck("thermal n_th resonator", n_r, 0.1, n_r < 0.1))
    out.append(RegimeCheck("thermal n_th qubit", n_q, 0.1, n_q < 0.1))
    return out

