"""Mode spectrum of a transmission-line resonator terminated by a symmetric SQUID.

Geometry is given in SI (``l0`` [H/m], ``c0`` [F/m], ``d`` [m], ``cj`` [F]) with
the single-junction Josephson energy ``ej`` as an angular frequency [rad/ns].
The external flux enters only through the junction phase ``phase = 2 e phi_bar``
(radians); derivatives are taken with respect to that phase.

Wavenumbers solve ``c k tan(kd) = 2 E_J cos(phase) - 2 b k^2`` with
``c = C0 v^2 / (2e)^2`` and ``b = C_J v^2 / (2e)^2`` (hbar = 1). The root search
uses the pole-free form ``h(k) = c k sin(kd) - (2 E_J cos - 2 b k^2) cos(kd)``,
which has exactly one sign change in each interval ``((n - 1/2) pi/d, (n + 1/2) pi/d)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import LinearRegimeError, SingularDerivativeError, SpectrumAnomalyError
from .units import E_CHARGE, HBAR

# (1/2e)^2 with hbar restored, in s/F; times 1e-9 gives rad/ns per (F m^2 / s^2)
PHASE_CAP_FACTOR = HBAR / (4 * E_CHARGE**2)
RESISTANCE_QUANTUM = HBAR / (2 * E_CHARGE**2)  # ohm


@dataclass(frozen=True)
class SquidResonatorGeometry:
    l0: float
    c0: float
    d: float
    cj: float
    ej: float
    flux_bias: float = 0.0

    def __post_init__(self):
        for name in ("l0", "c0", "d", "cj", "ej"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")
        if math.cos(self.flux_bias) <= 0:
            raise ValueError("flux bias must keep cos(phase) > 0 (stable branch)")

    @property
    def velocity(self) -> float:
        return 1.0 / math.sqrt(self.l0 * self.c0)

    @property
    def impedance(self) -> float:
        return math.sqrt(self.l0 / self.c0)

    @property
    def c_coeff(self) -> float:
        """``C0 v^2 / (2e)^2`` in rad/ns * m."""
        return PHASE_CAP_FACTOR * self.c0 * self.velocity**2 * 1e-9

    @property
    def b_coeff(self) -> float:
        """``C_J v^2 / (2e)^2`` in rad/ns * m^2."""
        return PHASE_CAP_FACTOR * self.cj * self.velocity**2 * 1e-9

    @property
    def inductive_energy(self) -> float:
        """``E_L,res = 1 / ((2e)^2 L0 d)`` in rad/ns."""
        return PHASE_CAP_FACTOR / (self.l0 * self.d) * 1e-9

    def with_(self, **changes) -> SquidResonatorGeometry:
        values = {k: getattr(self, k) for k in ("l0", "c0", "d", "cj", "ej", "flux_bias")}
        values.update(changes)
        return SquidResonatorGeometry(**values)


def _h(geo: SquidResonatorGeometry, k: float, phase: float) -> float:
    kd = k * geo.d
    rhs = 2 * geo.ej * math.cos(phase) - 2 * geo.b_coeff * k * k
    return geo.c_coeff * k * math.sin(kd) - rhs * math.cos(kd)


def transcendental_residual(geo: SquidResonatorGeometry, k: float, phase: float) -> float:
    """Relative residual of the cross-multiplied equation (finite at the tan poles)."""
    kd = k * geo.d
    lhs = geo.c_coeff * k * math.sin(kd)
    rhs = (2 * geo.ej * math.cos(phase) - 2 * geo.b_coeff * k * k) * math.cos(kd)
    scale = abs(lhs) + abs(rhs)
    return abs(lhs - rhs) / scale if scale > 0 else 0.0


def _bracket(geo: SquidResonatorGeometry, n: int) -> tuple[float, float]:
    lo = (n - 0.5) * math.pi / geo.d if n > 0 else 0.0
    hi = (n + 0.5) * math.pi / geo.d
    return lo, hi


def mode_wavenumbers(geo: SquidResonatorGeometry, phase: float | None = None, count: int = 1) -> np.ndarray:
    """First ``count`` positive roots, one per branch interval, in 1/m."""
    if count < 1:
        raise ValueError("count must be >= 1")
    ph = geo.flux_bias if phase is None else phase
    if math.cos(ph) <= 0:
        raise SpectrumAnomalyError(f"cos(phase) = {math.cos(ph):.3g} is not positive")
    roots = []
    for n in range(count):
        lo, hi = _bracket(geo, n)
        # keep the lower end off k = 0 where every term vanishes
        lo = max(lo, 1e-12 * hi)
        f_lo, f_hi = _h(geo, lo, ph), _h(geo, hi, ph)
        if not f_lo * f_hi < 0:
            raise SpectrumAnomalyError(
                f"no sign change for mode {n} on [{lo:.6g}, {hi:.6g}] 1/m: h = {f_lo:.3g}, {f_hi:.3g}"
            )
        k = brentq(lambda x: _h(geo, x, ph), lo, hi, xtol=1e-14 * hi, rtol=4 * np.finfo(float).eps, maxiter=200)
        roots.append(k)
    k = np.array(roots)
    if np.any(np.diff(k) <= 0):
        raise SpectrumAnomalyError(f"wavenumbers not strictly increasing: {k}")
    return k


def mode_frequencies(geo: SquidResonatorGeometry, phase: float | None = None, count: int = 1) -> np.ndarray:
    """Angular frequencies ``v k_n`` in rad/ns."""
    return geo.velocity * mode_wavenumbers(geo, phase, count) * 1e-9


def _dk_dphase(geo: SquidResonatorGeometry, k: float, phase: float) -> float:
    kd = k * geo.d
    c, b, d = geo.c_coeff, geo.b_coeff, geo.d
    rhs = 2 * geo.ej * math.cos(phase) - 2 * b * k * k
    dh_dphase = 2 * geo.ej * math.sin(phase) * math.cos(kd)
    dh_dk = c * math.sin(kd) + c * kd * math.cos(kd) + 4 * b * k * math.cos(kd) + rhs * d * math.sin(kd)
    scale = abs(c * math.sin(kd)) + abs(c * kd * math.cos(kd)) + abs(4 * b * k * math.cos(kd)) + abs(rhs * d * math.sin(kd))
    if abs(dh_dk) < 1e-12 * max(scale, 1e-300):
        raise SingularDerivativeError(f"dh/dk vanishes at k = {k:.6g} 1/m")
    return -dh_dphase / dh_dk


def mode_flux_derivative(geo: SquidResonatorGeometry, mode_index: int = 0, phase: float | None = None) -> float:
    """``d omega_n / d phase`` in rad/ns, by implicit differentiation of the root."""
    ph = geo.flux_bias if phase is None else phase
    k = mode_wavenumbers(geo, ph, mode_index + 1)[mode_index]
    return geo.velocity * _dk_dphase(geo, k, ph) * 1e-9


def finite_difference_derivative(geo: SquidResonatorGeometry, mode_index: int = 0, phase: float | None = None, step: float = 1e-3) -> float:
    """Richardson-extrapolated central difference of ``omega_n(phase)``.

    The slope can be a millionth of ``omega`` for a stiff junction, so a plain
    central difference loses to roundoff; extrapolating two wide steps keeps the
    truncation error at O(step^4) instead.
    """
    ph = geo.flux_bias if phase is None else phase

    def central(h):
        up = mode_frequencies(geo, ph + h, mode_index + 1)[mode_index]
        down = mode_frequencies(geo, ph - h, mode_index + 1)[mode_index]
        return (up - down) / (2 * h)

    return (4 * central(step / 2) - central(step)) / 3


class _Modes:
    """Normalised mode functions in the scaled coordinate ``u = x/d``.

    The weight is ``1 + 2 gamma delta(u - 1)`` with ``gamma = C_J / (C0 d)``;
    rescaling the weight by a constant leaves ``M`` and ``S`` unchanged.
    """

    def __init__(self, geo: SquidResonatorGeometry, phase: float, count: int):
        self.gamma = geo.cj / (geo.c0 * geo.d)
        k = mode_wavenumbers(geo, phase, count)
        self.kappa = k * geo.d
        self.dkappa = np.array([_dk_dphase(geo, kk, phase) for kk in k]) * geo.d
        g = self.gamma
        kp = self.kappa
        n2 = 0.5 + np.sin(2 * kp) / (4 * kp) + 2 * g * np.cos(kp) ** 2
        dn2 = np.cos(2 * kp) / (2 * kp) - np.sin(2 * kp) / (4 * kp**2) - 2 * g * np.sin(2 * kp)
        self.norm = np.sqrt(n2)
        self.dnorm = dn2 * self.dkappa / (2 * self.norm)

    def psi(self, i: int, u):
        return np.cos(self.kappa[i] * u) / self.norm[i]

    def dpsi(self, i: int, u):
        kp, nn = self.kappa[i], self.norm[i]
        return self.dkappa[i] * (-u * np.sin(kp * u)) / nn - np.cos(kp * u) * self.dnorm[i] / nn**2

    def inner(self, f, g) -> float:
        val, _ = quad(lambda u: f(u) * g(u), 0.0, 1.0, epsabs=1e-14, epsrel=1e-13, limit=400)
        return val + 2 * self.gamma * f(1.0) * g(1.0)


def coupling_matrix(geo: SquidResonatorGeometry, phase: float | None = None, n_modes: int = 2) -> np.ndarray:
    """``M_ik = <psi_i, d psi_k / d phase>`` under the SQUID-weighted inner product."""
    if n_modes < 2:
        raise ValueError("n_modes must be >= 2")
    ph = geo.flux_bias if phase is None else phase
    modes = _Modes(geo, ph, n_modes)
    m = np.zeros((n_modes, n_modes))
    for i in range(n_modes):
        for k in range(n_modes):
            m[i, k] = modes.inner(lambda u, i=i: modes.psi(i, u), lambda u, k=k: modes.dpsi(k, u))
    return m


def s_matrix(geo: SquidResonatorGeometry, phase: float | None = None, n_modes: int = 2) -> np.ndarray:
    """``S_kj = <d psi_k/d phase, d psi_j/d phase>``; symmetric by construction of the inner product."""
    ph = geo.flux_bias if phase is None else phase
    modes = _Modes(geo, ph, n_modes)
    s = np.zeros((n_modes, n_modes))
    for i in range(n_modes):
        for j in range(n_modes):
            s[i, j] = modes.inner(lambda u, i=i: modes.dpsi(i, u), lambda u, j=j: modes.dpsi(j, u))
    return s


def orthonormality_error(geo: SquidResonatorGeometry, phase: float | None = None, n_modes: int = 3) -> float:
    ph = geo.flux_bias if phase is None else phase
    modes = _Modes(geo, ph, n_modes)
    gram = np.array(
        [[modes.inner(lambda u, i=i: modes.psi(i, u), lambda u, j=j: modes.psi(j, u)) for j in range(n_modes)] for i in range(n_modes)]
    )
    return float(np.abs(gram - np.eye(n_modes)).max())


@dataclass(frozen=True)
class ModeSpectrum:
    phase: float
    wavenumbers: np.ndarray
    frequencies: np.ndarray
    flux_derivatives: np.ndarray
    residuals: np.ndarray
    coupling_matrix: np.ndarray | None = None

    def as_dict(self) -> dict:
        return {
            "phase": self.phase,
            "wavenumbers": self.wavenumbers.tolist(),
            "frequencies": self.frequencies.tolist(),
            "flux_derivatives": self.flux_derivatives.tolist(),
            "residuals": self.residuals.tolist(),
            "coupling_matrix": None if self.coupling_matrix is None else self.coupling_matrix.tolist(),
        }


def mode_spectrum(geo: SquidResonatorGeometry, phase: float | None = None, count: int = 4, with_coupling: bool = True) -> ModeSpectrum:
    ph = geo.flux_bias if phase is None else phase
    k = mode_wavenumbers(geo, ph, count)
    deriv = np.array([geo.velocity * _dk_dphase(geo, kk, ph) * 1e-9 for kk in k])
    res = np.array([transcendental_residual(geo, kk, ph) for kk in k])
    m = coupling_matrix(geo, ph, count) if with_coupling and count >= 2 else None
    return ModeSpectrum(ph, k, geo.velocity * k * 1e-9, deriv, res, m)


def participation_ratio(geo: SquidResonatorGeometry, phase: float | None = None) -> float:
    """``sigma = E_L,res / (2 E_J cos(phase))``."""
    ph = geo.flux_bias if phase is None else phase
    return geo.inductive_energy / (2 * geo.ej * math.cos(ph))


def kerr_ratio(geo: SquidResonatorGeometry, phase: float | None = None) -> float:
    """``K_SQUID / omega ~ sigma^3 pi Z0 / (2 R_q)``."""
    sigma = participation_ratio(geo, phase)
    return sigma**3 * math.pi * geo.impedance / (2 * RESISTANCE_QUANTUM)


@dataclass(frozen=True)
class ExtractedParams:
    omega: float
    omega_prime: float
    g_d: float
    theta_shift: float
    sigma: float
    k_squid_ratio: float
    multimode_advisory: float | None
    epsilon: float
    omega_d: float | None
    theta: float

    def physical_params_fields(self) -> dict:
        out = {"omega": self.omega, "g_d": self.g_d, "epsilon": self.epsilon, "theta": self.theta + self.theta_shift}
        if self.omega_d is not None:
            out["omega_d"] = self.omega_d
        return out

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def extract_model_params(
    geo: SquidResonatorGeometry,
    phase: float | None = None,
    drive: dict | None = None,
    mode_index: int = 0,
    advisory_modes: int = 3,
) -> ExtractedParams:
    """Single-mode parameters of the resonator at the operating flux.

    With a flux drive ``delta phi = eps Phi_0 sin(w_d t - theta)`` the phase
    moves by ``2 pi eps sin(...)``, so the ``(w'/2) delta phi (a + a^dag)^2``
    term has ``g_d = pi |d omega / d phase|``. A negative slope is absorbed into
    the drive phase as ``theta_shift = pi``.
    """
    ph = geo.flux_bias if phase is None else phase
    drive = drive or {}
    sigma = participation_ratio(geo, ph)
    if sigma > 0.1:
        raise LinearRegimeError(f"sigma = {sigma:.3g} > 0.1: the SQUID is not a weak perturbation")
    omega = mode_frequencies(geo, ph, mode_index + 1)[mode_index]
    slope = mode_flux_derivative(geo, mode_index, ph)
    eps = float(drive.get("epsilon", 0.0))
    omega_d = drive.get("omega_d")
    advisory = None
    if advisory_modes >= 2:
        n = max(advisory_modes, mode_index + 2)
        m = coupling_matrix(geo, ph, n)
        freqs = mode_frequencies(geo, ph, n)
        spacing = np.min(np.abs(np.delete(freqs, mode_index) - freqs[mode_index]))
        wd = omega_d if omega_d is not None else 2 * omega
        off = np.delete(np.abs(m[mode_index]), mode_index).max()
        advisory = float(off * 2 * math.pi * eps * wd / spacing)
    return ExtractedParams(
        omega=float(omega),
        omega_prime=float(slope),
        g_d=float(math.pi * abs(slope)),
        theta_shift=math.pi if slope < 0 else 0.0,
        sigma=float(sigma),
        k_squid_ratio=float(kerr_ratio(geo, ph)),
        multimode_advisory=advisory,
        epsilon=eps,
        omega_d=None if omega_d is None else float(omega_d),
        theta=float(drive.get("theta", 0.0)),
    )


def design_geometry(
    target_omega: float,
    target_g_d: float,
    phase: float,
    l0: float = 4.2e-7,
    c0: float = 1.7e-10,
    cj: float = 1e-15,
    ej_bounds: tuple[float, float] = (1e3, 1e7),
) -> SquidResonatorGeometry:
    """Find ``(d, E_J)`` giving the fundamental at ``target_omega`` with drive coupling ``target_g_d``.

    Nested bracketing: the inner search sets ``d`` for the frequency at fixed
    ``E_J``; the outer search moves ``E_J``, along which ``g_d`` is monotone.
    """
    v = 1.0 / math.sqrt(l0 * c0)
    quarter = math.pi * v / (2 * target_omega * 1e9)

    def length_for(ej):
        def f(d):
            geo = SquidResonatorGeometry(l0, c0, d, cj, ej, phase)
            return mode_frequencies(geo, phase, 1)[0] - target_omega
        # the SQUID only lowers the frequency below the quarter-wave value
        return brentq(f, 1e-3 * quarter, quarter, xtol=1e-15, rtol=1e-14)

    def g_err(log_ej):
        ej = math.exp(log_ej)
        geo = SquidResonatorGeometry(l0, c0, length_for(ej), cj, ej, phase)
        return math.pi * abs(mode_flux_derivative(geo, 0, phase)) - target_g_d

    lo, hi = math.log(ej_bounds[0]), math.log(ej_bounds[1])
    if g_err(lo) * g_err(hi) > 0:
        raise SpectrumAnomalyError(f"g_d = {target_g_d} not reachable for E_J in {ej_bounds} at phase {phase}")
    ej = math.exp(brentq(g_err, lo, hi, xtol=1e-13, rtol=1e-13))
    return SquidResonatorGeometry(l0, c0, length_for(ej), cj, ej, phase)
