"""Encoding a qubit into squeezed-superposition code states.

Code states: ``chi_pm = (|r, t> +- |r, t + pi>) / (sqrt(2) c_pm)`` with
``c_pm = sqrt(1 +- 1/sqrt(cosh 2r))``. The encoding runs

    H -> C-Sqz(r, theta + pi) -> X -> C-Sqz(r, theta) -> [wait] -> X -> H

and a sigma_z measurement then leaves the resonator in
``alpha chi_+ + beta chi_-`` (outcome |0>, called "+") or
``alpha chi_- + beta chi_+`` (outcome |1>, called "-").

Backends
--------
ideal     gate-level operators; the |0>-branch rotation is removed exactly
unitary   constant-Hamiltonian propagation (driven frame by default)
lindblad  master equation with the five thermal dissipators (RWA frame by default)
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Literal, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import gammaln

from .dynamics import LindbladSpec, evolve_lindblad, lindblad_spec
from .errors import CSqueezeError, DegenerateCodeError, InvalidStateError
from .gates import ControlledGateParams, SqueezeParams, controlled_squeeze, qubit_gate, rotation, squeeze
from .hilbert import HilbertLayout, OperatorMatrix, QuantumState, fock, hermitian_exponential, resonator_layout
from .model import PhysicalParams, derive, driven_frame_hamiltonian, rwa_hamiltonian

Backend = Literal["ideal", "unitary", "lindblad"]
Frame = Literal["rwa", "driven"]
DEFAULT_FRAME = {"unitary": "driven", "lindblad": "rwa"}


@dataclass(frozen=True)
class BlochPoint:
    theta_b: float
    phi_b: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.theta_b) and math.isfinite(self.phi_b)):
            raise InvalidStateError("Bloch angles must be finite")

    @property
    def alpha(self) -> complex:
        return complex(math.cos(self.theta_b / 2))

    @property
    def beta(self) -> complex:
        return complex(np.exp(1j * self.phi_b) * math.sin(self.theta_b / 2))

    @property
    def p_z(self) -> float:
        return abs(self.alpha) ** 2 - abs(self.beta) ** 2

    def qubit_vector(self) -> np.ndarray:
        return np.array([self.alpha, self.beta])


EQUATOR_PROBE = BlochPoint(math.pi / 2, math.pi / 2)


def code_normalizers(r: float) -> tuple[float, float]:
    s = 1.0 / math.sqrt(math.cosh(2 * r))
    return math.sqrt(1 + s), math.sqrt(1 - s)


@dataclass(frozen=True, eq=False)
class CodeStates:
    chi_plus: QuantumState
    chi_minus: QuantumState
    c_plus: float
    c_minus: float
    r: float
    theta_tilde: float


@lru_cache(maxsize=32)
def _chi_vectors(r: float, theta_tilde: float, dim: int):
    vac = fock(dim, 0).data
    s1 = squeeze(SqueezeParams(r, theta_tilde), dim).data @ vac
    s2 = squeeze(SqueezeParams(r, theta_tilde + math.pi), dim).data @ vac
    cp, cm = code_normalizers(r)
    plus = (s1 + s2) / (math.sqrt(2) * cp)
    minus = (s1 - s2) / (math.sqrt(2) * cm)
    for v in (plus, minus):
        v.setflags(write=False)
    return plus, minus


def chi_states(r: float, theta_tilde: float, dim: int) -> CodeStates:
    if r == 0:
        raise DegenerateCodeError("r = 0 gives c_- = 0; the odd code state does not exist")
    if not math.isfinite(r) or r < 0:
        raise DegenerateCodeError(f"squeezing must be positive, got {r!r}")
    plus, minus = _chi_vectors(float(r), float(theta_tilde), int(dim))
    layout = resonator_layout(dim)
    # renormalise away the truncation tail (|1 - norm| is ~1e-13 at r = 1.5, N = 90)
    cp, cm = code_normalizers(r)
    return CodeStates(
        QuantumState(layout, plus / np.linalg.norm(plus)),
        QuantumState(layout, minus / np.linalg.norm(minus)),
        cp,
        cm,
        float(r),
        float(theta_tilde),
    )


def chi_series(r: float, theta_tilde: float, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form Fock coefficients of the two code states.

    Written with an explicit ``-1`` in front of the odd state, which makes it
    the negative of ``(|r,t> - |r,t+pi>)/(sqrt(2) c_-)``; compare up to a
    global phase.
    """
    cp, cm = code_normalizers(r)
    t = math.tanh(r)
    plus = np.zeros(dim, dtype=complex)
    minus = np.zeros(dim, dtype=complex)
    pref = 1.0 / math.sqrt(2 * math.cosh(r))
    for k in range(dim // 4 + 1):
        n = 4 * k
        if n < dim:
            log_mag = 0.5 * gammaln(n + 1) - (2 * k - 1) * math.log(2) - gammaln(2 * k + 1)
            plus[n] = pref / cp * math.exp(log_mag) * t ** (2 * k) * np.exp(2j * k * theta_tilde)
        n = 4 * k + 2
        if n < dim:
            log_mag = 0.5 * gammaln(n + 1) - 2 * k * math.log(2) - gammaln(2 * k + 2)
            minus[n] = -pref / cm * math.exp(log_mag) * (-t) ** (2 * k + 1) * np.exp(1j * (2 * k + 1) * theta_tilde)
    return plus, minus


def series_mismatch(code: CodeStates) -> dict:
    """Distance between numeric code states and the closed-form series, up to a global phase."""
    dim = code.chi_plus.layout.resonator_dim
    sp, sm = chi_series(code.r, code.theta_tilde, dim)
    out = {}
    for name, num, ser in (("plus", code.chi_plus.data, sp), ("minus", code.chi_minus.data, sm)):
        overlap = np.vdot(ser, num)
        phase = overlap / abs(overlap)
        out[name] = {
            "max_abs_error": float(np.abs(num - phase * ser).max()),
            "global_phase": complex(phase),
        }
    return out


def average_fidelity_exact(r: float, p_z: float) -> float:
    """Probability-weighted branch fidelity of the ideal encoding."""
    if abs(p_z) > 1:
        raise ValueError(f"|p_z| must not exceed 1, got {p_z!r}")
    return 0.5 * (1 + p_z**2) + 0.5 * (1 - p_z**2) * math.sqrt(1 - 1 / math.cosh(2 * r))


def branch_probability_plus(r: float, p_z: float) -> float:
    return 0.5 * (1 + p_z / math.sqrt(math.cosh(2 * r)))


def _joint_layout(dim: int) -> HilbertLayout:
    return HilbertLayout(dim, True)


def _initial_state(bloch: BlochPoint, dim: int) -> QuantumState:
    return QuantumState(_joint_layout(dim), np.kron(bloch.qubit_vector(), fock(dim, 0).data))


def ideal_encode(bloch: BlochPoint, r: float, theta: float, dim: int) -> QuantumState:
    """Encoding with perfect controlled squeezes (identity on the |0> branch)."""
    if r == 0:
        raise DegenerateCodeError("r = 0: nothing is encoded")
    layout = _joint_layout(dim)
    h = qubit_gate("hadamard", layout)
    x = qubit_gate("pi_rotation", layout)
    c1 = controlled_squeeze(ControlledGateParams(SqueezeParams(r, theta + math.pi), 0.0), layout)
    c2 = controlled_squeeze(ControlledGateParams(SqueezeParams(r, theta), 0.0), layout)
    state = _initial_state(bloch, dim)
    for op in (h, c1, x, c2, x, h):
        state = op.apply(state)
    return state


def closed_form_encoded(bloch: BlochPoint, r: float, theta: float, dim: int) -> QuantumState:
    """``(|0>(a c+ chi+ + b c- chi-) + |1>(a c- chi- + b c+ chi+)) / sqrt(2)``."""
    code = chi_states(r, theta, dim)
    a, b = bloch.alpha, bloch.beta
    cp, cm = code.c_plus, code.c_minus
    xp, xm = code.chi_plus.data, code.chi_minus.data
    top = a * cp * xp + b * cm * xm
    bottom = a * cm * xm + b * cp * xp
    vec = np.concatenate([top, bottom]) / math.sqrt(2)
    return QuantumState(_joint_layout(dim), vec / np.linalg.norm(vec))


@dataclass(frozen=True)
class ProtocolReport:
    bloch: BlochPoint
    p_plus: float
    p_minus: float
    f_plus: float
    f_minus: float
    f_avg: float
    purity_plus: float
    purity_minus: float
    phi_used: float
    backend: str
    theta_tilde: float = 0.0
    wait_time: float = 0.0
    max_leakage: float = 0.0
    max_trace_drift: float = 0.0
    flags: tuple[str, ...] = ()
    failed: bool = False
    error: str = ""

    def row(self) -> dict:
        return {
            "theta_b": self.bloch.theta_b,
            "phi_b": self.bloch.phi_b,
            "p_plus": self.p_plus,
            "p_minus": self.p_minus,
            "f_plus": self.f_plus,
            "f_minus": self.f_minus,
            "f_avg": self.f_avg,
            "purity_plus": self.purity_plus,
            "purity_minus": self.purity_minus,
            "phi_used": self.phi_used,
        }

    def as_dict(self) -> dict:
        out = asdict(self)
        out["bloch"] = {"theta_b": self.bloch.theta_b, "phi_b": self.bloch.phi_b}
        out["flags"] = list(self.flags)
        return out

    @classmethod
    def failure(cls, bloch: BlochPoint, backend: str, phi: float, error: str) -> ProtocolReport:
        nan = float("nan")
        return cls(bloch, nan, nan, nan, nan, nan, nan, nan, phi, backend, failed=True, error=error)


def analyse_branches(
    joint: QuantumState, bloch: BlochPoint, code: CodeStates, backend: str, phi_used: float, **extra
) -> ProtocolReport:
    """Measurement statistics and branch fidelities of an encoded joint state."""
    n = joint.layout.resonator_dim
    rho = joint.density_matrix()
    a, b = bloch.alpha, bloch.beta
    targets = (
        a * code.chi_plus.data + b * code.chi_minus.data,
        a * code.chi_minus.data + b * code.chi_plus.data,
    )
    probs, fids, purs = [], [], []
    for q, tgt in enumerate(targets):
        blk = rho[q * n:(q + 1) * n, q * n:(q + 1) * n]
        p = float(np.trace(blk).real)
        probs.append(p)
        if p <= 1e-14:
            fids.append(0.0)
            purs.append(1.0)
            continue
        fids.append(float(np.clip(np.vdot(tgt, blk @ tgt).real / p, 0.0, 1.0)))
        purs.append(float(np.clip(np.einsum("ij,ji->", blk, blk).real / p**2, 0.0, 1.0)))
    total = probs[0] + probs[1]
    probs = [p / total for p in probs]
    return ProtocolReport(
        bloch=bloch,
        p_plus=probs[0],
        p_minus=probs[1],
        f_plus=fids[0],
        f_minus=fids[1],
        f_avg=probs[0] * fids[0] + probs[1] * fids[1],
        purity_plus=purs[0],
        purity_minus=purs[1],
        phi_used=phi_used,
        backend=backend,
        theta_tilde=code.theta_tilde,
        **extra,
    )


def compensation_wait(phi: float, delta: float) -> float:
    """Smallest ``tau >= 0`` with ``|delta| tau + phi = 0 (mod 2 pi)``, i.e. the total |0>-branch angle is a full turn."""
    k = math.ceil(phi / (2 * math.pi) - 1e-12)
    return max(0.0, (2 * math.pi * k - phi) / abs(delta))


def _segment_hamiltonian(params: PhysicalParams, frame: str, theta: float) -> OperatorMatrix:
    if frame == "rwa":
        return rwa_hamiltonian(params, theta)
    if frame == "driven":
        return driven_frame_hamiltonian(params, theta)
    raise ValueError(f"unknown frame {frame!r}")


@lru_cache(maxsize=8)
def _segment_propagators(params: PhysicalParams, frame: str):
    u1 = hermitian_exponential(_segment_hamiltonian(params, frame, params.theta + math.pi), params.gate_time)
    u2 = hermitian_exponential(_segment_hamiltonian(params, frame, params.theta), params.gate_time)
    return u1, u2


def _idle_diagonal(params: PhysicalParams, frame: str) -> np.ndarray:
    h = _segment_hamiltonian(params.replace(epsilon=0.0), frame, params.theta)
    return np.diag(h.data).real.copy()


@dataclass(frozen=True, eq=False)
class _PreWait:
    state: QuantumState
    leakage: float
    drift: float


@lru_cache(maxsize=64)
def _pre_wait(bloch: BlochPoint, params: PhysicalParams, backend: str, frame: str, spec: LindbladSpec | None, tol: float):
    layout = params.layout
    dim = params.resonator_dim
    h = qubit_gate("hadamard", layout)
    x = qubit_gate("pi_rotation", layout)
    state = h.apply(_initial_state(bloch, dim))
    if backend == "ideal":
        d = derive(params)
        # perfect gate: exact squeeze on |1>, exact rotation by phi_analytic on |0>
        c1 = controlled_squeeze(ControlledGateParams(SqueezeParams(d.r_target, params.theta + math.pi), d.phi_analytic), layout)
        c2 = controlled_squeeze(ControlledGateParams(SqueezeParams(d.r_target, params.theta), d.phi_analytic), layout)
        state = c2.apply(x.apply(c1.apply(state)))
        return _PreWait(state, 0.0, 0.0)
    if backend == "unitary":
        u1, u2 = _segment_propagators(params, frame)
        state = u2.apply(x.apply(u1.apply(state)))
        pops = np.abs(state.data) ** 2
        leak = float(pops.reshape(2, dim).sum(axis=0)[-10:].sum())
        return _PreWait(state, leak, 0.0)
    if backend == "lindblad":
        rho = state.to_mixed()
        r1 = evolve_lindblad(_segment_hamiltonian(params, frame, params.theta + math.pi), spec, rho, params.gate_time, tol)
        r2 = evolve_lindblad(_segment_hamiltonian(params, frame, params.theta), spec, x.apply(r1.final_state), params.gate_time, tol)
        return _PreWait(
            r2.final_state,
            max(r1.max_leakage, r2.max_leakage),
            max(r1.max_trace_drift, r2.max_trace_drift),
        )
    raise ValueError(f"unknown backend {backend!r}")


@dataclass(frozen=True, eq=False)
class EncodeResult:
    joint_state: QuantumState
    report: ProtocolReport


def compensated_encode(
    bloch: BlochPoint,
    params: PhysicalParams,
    phi_star: float | None = None,
    backend: Backend = "unitary",
    frame: Frame | None = None,
    spec: LindbladSpec | None = None,
    tol: float = 1e-9,
) -> EncodeResult:
    """Run the wait-compensated encoding and analyse both measurement branches.

    ``phi_star`` is the |0>-branch rotation the wait is meant to cancel
    (default: the analytic ``|delta_tilde| T``). The wait uses the drive-off
    Hamiltonian of the same frame, so the cancellation is exact only when
    ``phi_star`` equals the angle the gate really produced.
    """
    d = derive(params)
    if d.r_target == 0:
        raise DegenerateCodeError("epsilon = 0 gives r = 0; there is no code space")
    phi = d.phi_analytic if phi_star is None else float(phi_star)
    frame = frame or DEFAULT_FRAME.get(backend, "rwa")
    if backend == "lindblad" and spec is None:
        spec = lindblad_spec(params)
    if backend != "lindblad":
        spec = None
    pre = _pre_wait(bloch, params, backend, frame, spec, tol)
    tau = compensation_wait(phi, d.delta)
    layout = params.layout
    dim = params.resonator_dim
    flags = []
    if tau > 10 * params.tau_r:
        flags.append("wait_exceeds_10_over_kappa")
    leak, drift = pre.leakage, pre.drift

    if backend == "ideal":
        wait = rotation(2 * math.pi * math.ceil(phi / (2 * math.pi) - 1e-12) - phi, dim)
        u = np.kron(np.diag([1.0, 0.0]), wait.data) + np.kron(np.diag([0.0, 1.0]), np.eye(dim))
        # the rotation angle applied by the perfect gate is phi_analytic; compensate phi
        state = OperatorMatrix(layout, u).apply(pre.state)
    elif backend == "unitary":
        phases = np.exp(-1j * _idle_diagonal(params, frame) * tau)
        state = QuantumState(layout, phases * pre.state.data)
    else:
        idle = _segment_hamiltonian(params.replace(epsilon=0.0), frame, params.theta)
        res = evolve_lindblad(idle, spec, pre.state, tau, tol)
        state = res.final_state
        leak = max(leak, res.max_leakage)
        drift = max(drift, res.max_trace_drift)

    h = qubit_gate("hadamard", layout)
    x = qubit_gate("pi_rotation", layout)
    state = h.apply(x.apply(state))
    # the wait removes the residual angle, so the targets carry theta_tilde = theta
    residual = 0.0
    code = chi_states(d.r_target, params.theta + 2 * residual, dim)
    report = analyse_branches(
        state,
        bloch,
        code,
        backend,
        phi,
        wait_time=tau,
        max_leakage=leak,
        max_trace_drift=drift,
        flags=tuple(flags),
    )
    return EncodeResult(state, report)


@dataclass(frozen=True)
class OptimizationResult:
    phi_star: float
    f_at_star: float
    phi_analytic: float
    local_maxima: tuple[tuple[float, float], ...] = ()
    multimodal: bool = False
    degenerate: bool = False
    evaluations: int = 0
    backend: str = "unitary"
    frame: str = "driven"
    # scanned (phi, f_avg) pairs, kept for plotting
    landscape: tuple[tuple[float, float], ...] = ()

    def as_dict(self) -> dict:
        out = asdict(self)
        out["local_maxima"] = [list(m) for m in self.local_maxima]
        out["landscape"] = [list(m) for m in self.landscape]
        return out


def optimize_compensation_angle(
    params: PhysicalParams,
    backend: Backend = "unitary",
    probe: BlochPoint = EQUATOR_PROBE,
    frame: Frame | None = None,
    grid_points: int = 61,
    xatol: float = 1e-4,
    spec: LindbladSpec | None = None,
) -> OptimizationResult:
    """Maximise the probe fidelity over ``phi`` in ``[phi_analytic - pi, phi_analytic + pi]``.

    The landscape repeats with period close to pi, so a bracketing search on
    the full window is not well posed: the window is scanned on a grid, every
    interior local maximum is recorded, the best one (nearest the analytic
    seed on ties) is refined with bounded Brent, and the result says whether
    the landscape was multimodal.
    """
    d = derive(params)
    seed = d.phi_analytic
    frame = frame or DEFAULT_FRAME.get(backend, "rwa")
    if d.r_target == 0:
        return OptimizationResult(seed, float("nan"), seed, degenerate=True, backend=backend, frame=frame)
    count = {"n": 0}

    def fid(phi):
        count["n"] += 1
        return compensated_encode(probe, params, phi, backend, frame, spec).report.f_avg

    grid = np.linspace(seed - math.pi, seed + math.pi, grid_points)
    values = np.array([fid(p) for p in grid])
    if values.max() - values.min() < 1e-9:
        return OptimizationResult(seed, float(values.max()), seed, degenerate=True, evaluations=count["n"], backend=backend, frame=frame)

    peaks = [i for i in range(1, grid_points - 1) if values[i] >= values[i - 1] and values[i] >= values[i + 1]]
    for i in (0, grid_points - 1):
        nb = 1 if i == 0 else grid_points - 2
        if values[i] > values[nb]:
            peaks.append(i)
    best_val = max(values[i] for i in peaks)
    candidates = [i for i in peaks if values[i] >= best_val - 1e-9]
    best = min(candidates, key=lambda i: abs(grid[i] - seed))
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, grid_points - 1)]
    res = minimize_scalar(lambda p: -fid(p), bounds=(lo, hi), method="bounded", options={"xatol": xatol})
    phi_star, f_star = float(res.x), float(-res.fun)
    if values[best] > f_star:
        phi_star, f_star = float(grid[best]), float(values[best])
    maxima = tuple((float(grid[i]), float(values[i])) for i in sorted(peaks))
    scan = tuple((float(p), float(v)) for p, v in zip(grid, values))
    return OptimizationResult(
        phi_star,
        f_star,
        seed,
        local_maxima=maxima,
        multimodal=len(peaks) > 1,
        evaluations=count["n"],
        backend=backend,
        frame=frame,
        landscape=scan,
    )


def bloch_grid(theta_values: Sequence[float], phi_values: Sequence[float]) -> list[BlochPoint]:
    return [BlochPoint(float(t), float(p)) for t in theta_values for p in phi_values]


def bloch_sweep(
    params: PhysicalParams,
    grid: Sequence[BlochPoint],
    phi_star: float | None = None,
    backend: Backend = "unitary",
    frame: Frame | None = None,
    jobs: int = 1,
    spec: LindbladSpec | None = None,
) -> list[ProtocolReport]:
    """One report per Bloch point, in input order; a failing point is marked, not raised."""
    phi = derive(params).phi_analytic if phi_star is None else phi_star

    def one(point: BlochPoint) -> ProtocolReport:
        try:
            return compensated_encode(point, params, phi, backend, frame, spec).report
        except (CSqueezeError, ArithmeticError, ValueError) as exc:
            return ProtocolReport.failure(point, backend, phi, f"{type(exc).__name__}: {exc}")

    if jobs <= 1:
        return [one(p) for p in grid]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(one, grid))


@dataclass
class SweepSummary:
    reports: list[ProtocolReport] = field(default_factory=list)

    def by_latitude(self) -> dict[float, dict]:
        out: dict[float, dict] = {}
        for rep in self.reports:
            if rep.failed:
                continue
            key = round(rep.bloch.theta_b, 12)
            slot = out.setdefault(key, {"f_avg": [], "purity": []})
            slot["f_avg"].append(rep.f_avg)
            slot["purity"].append(rep.p_plus * rep.purity_plus + rep.p_minus * rep.purity_minus)
        return {
            k: {
                "f_min": min(v["f_avg"]),
                "f_mean": float(np.mean(v["f_avg"])),
                "f_max": max(v["f_avg"]),
                "purity_min": min(v["purity"]),
                "purity_mean": float(np.mean(v["purity"])),
            }
            for k, v in out.items()
        }
