import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from csqueeze.dynamics import LindbladSpec, evolve_lindblad, evolve_unitary, lindblad_spec, thermal_occupation
from csqueeze.errors import KindMismatchError
from csqueeze.hilbert import (
    SIGMA_Z,
    HilbertLayout,
    OperatorMatrix,
    QuantumState,
    fock,
    number,
    qubit_state,
    resonator_layout,
    tensor,
)
from csqueeze.model import PhysicalParams, TimeDependentHamiltonian, rwa_hamiltonian

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)


def thermal_diag(n_th, dim):
    k = np.arange(dim)
    return n_th**k / (1 + n_th) ** (k + 1)


class TestThermalOccupation:
    def test_frozen_reference(self):
        # 1 / (exp(hbar w / k T) - 1) with the exact SI h and k
        hbar, kb = 6.62607015e-34 / (2 * math.pi), 1.380649e-23
        for ghz, frozen in ((6.0, 0.0083044), (4.0, 0.0425167)):
            w = 2 * math.pi * ghz * 1e9
            oracle = 1 / math.expm1(hbar * w / (kb * 0.06))
            assert thermal_occupation(2 * math.pi * ghz, 0.06) == pytest.approx(oracle, rel=1e-9)
            assert oracle == pytest.approx(frozen, abs=1e-7)

    @pytest.mark.parametrize("w,t", [(1.0, 0.0), (0.0, 0.1), (-1.0, 0.1)])
    def test_rejects_non_positive(self, w, t):
        with pytest.raises(ValueError):
            thermal_occupation(w, t)


class TestSpec:
    def test_rates_from_lifetimes(self):
        p = PhysicalParams()
        s = lindblad_spec(p)
        n = thermal_occupation(p.omega, p.temperature)
        nq = thermal_occupation(p.omega_q, p.temperature)
        assert s.kappa1 == pytest.approx((n + 1) / 2e5)
        assert s.kappa2 == pytest.approx(n / 2e5)
        assert s.kappa1p == pytest.approx((nq + 1) / 2e5)
        assert s.kappa2p == pytest.approx(nq / 2e5)
        assert s.kappa_phi == pytest.approx(1e-4)

    def test_channels_per_layout(self):
        s = LindbladSpec(1, 1, 1, 1, 1)
        assert len(s.channels(HilbertLayout(4))) == 5
        assert len(s.channels(HilbertLayout(4, False))) == 2
        assert len(s.channels(HilbertLayout.qubit())) == 3
        assert len(LindbladSpec(kappa1=1.0).channels(HilbertLayout(4))) == 1
        assert LindbladSpec().is_closed

    def test_coherence_rate(self):
        s = LindbladSpec(kappa1p=0.2, kappa2p=0.1, kappa_phi=0.5, dephasing_factor=0.25)
        assert s.coherence_decay_rate == pytest.approx(2 * 0.25 * 0.5 + 0.15)

    def test_negative_rate_rejected(self):
        with pytest.raises(ValueError):
            LindbladSpec(kappa1=-1.0)


class TestUnitary:
    @given(st.integers(0, 10_000), st.floats(0.0, 5.0))
    def test_constant_matches_expm(self, seed, t):
        rng = np.random.default_rng(seed)
        m = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        h = 0.5 * (m + m.conj().T)
        psi0 = rng.normal(size=6) + 1j * rng.normal(size=6)
        psi0 /= np.linalg.norm(psi0)
        lay = resonator_layout(6)
        res = evolve_unitary(OperatorMatrix(lay, h), QuantumState(lay, psi0), t)
        oracle = scipy.linalg.expm(-1j * t * h) @ psi0
        assert np.abs(res.final_state.data - oracle).max() < 1e-10

    def _rabi_oracle(self, amp, w, t):
        area = amp * math.sin(w * t) / w
        return np.array([math.cos(area), -1j * math.sin(area)])

    def test_callable_drive(self):
        amp, w, t = 0.3, 0.7, 11.0
        h = lambda s: amp * math.cos(w * s) * SIGMA_X  # noqa: E731
        res = evolve_unitary(h, qubit_state(1, 0), t, tol=1e-11)
        assert np.abs(res.final_state.data - self._rabi_oracle(amp, w, t)).max() < 1e-8
        assert res.diagnostics["method"] == "DOP853"

    def test_time_dependent_terms(self):
        amp, w, t = 0.3, 0.7, 11.0
        td = TimeDependentHamiltonian(
            HilbertLayout.qubit(), np.zeros((2, 2), complex), ((SIGMA_X, lambda s: amp * math.cos(w * s)),)
        )
        res = evolve_unitary(td, qubit_state(1, 0), t, tol=1e-11)
        assert np.abs(res.final_state.data - self._rabi_oracle(amp, w, t)).max() < 1e-8
        assert res.max_trace_drift < 1e-8

    def test_input_checks(self):
        with pytest.raises(KindMismatchError):
            evolve_unitary(number(3), fock(3, 0).to_mixed(), 1.0)
        with pytest.raises(ValueError):
            evolve_unitary(number(3), fock(3, 0), -1.0)


class TestLindblad:
    def test_closed_system_matches_unitary(self):
        p = PhysicalParams(resonator_dim=24, epsilon=0.05)
        h = rwa_hamiltonian(p)
        psi = tensor(qubit_state(1 / math.sqrt(2), 1 / math.sqrt(2)), fock(24, 0))
        u = evolve_unitary(h, psi, 200.0).final_state.density_matrix()
        res = evolve_lindblad(h, LindbladSpec(), psi.to_mixed(), 200.0, tol=1e-11)
        assert np.abs(res.final_state.data - u).max() < 1e-8
        assert res.max_trace_drift < 1e-8

    def test_zero_temperature_decay_of_fock_two(self):
        kappa, t = 0.01, 70.0
        lay = resonator_layout(6)
        res = evolve_lindblad(OperatorMatrix(lay, np.zeros((6, 6))), LindbladSpec(kappa1=kappa), fock(6, 2).to_mixed(), t)
        e = math.exp(-kappa * t)
        pops = np.diag(res.final_state.data).real
        assert pops[:3] == pytest.approx([(1 - e) ** 2, 2 * e * (1 - e), e**2], abs=1e-8)

    @settings(max_examples=6)
    @given(st.floats(0.05, 0.5), st.floats(0.0, 0.3), st.floats(0.0, 1.0), st.floats(0.1, 1.0))
    def test_qubit_relaxation_and_dephasing(self, k1, k2, kphi, factor):
        t = 3.0
        spec = LindbladSpec(kappa1p=k1, kappa2p=k2, kappa_phi=kphi, dephasing_factor=factor)
        lay = HilbertLayout.qubit()
        plus = qubit_state(1 / math.sqrt(2), 1 / math.sqrt(2)).to_mixed()
        res = evolve_lindblad(OperatorMatrix(lay, np.zeros((2, 2))), spec, plus, t, tol=1e-11)
        rho = res.final_state.data
        # |0> is the upper level (sz = +1), so decay empties it
        p_inf = k2 / (k1 + k2)
        assert rho[0, 0].real == pytest.approx(p_inf + (0.5 - p_inf) * math.exp(-(k1 + k2) * t), abs=1e-8)
        assert abs(rho[0, 1]) == pytest.approx(0.5 * math.exp(-spec.coherence_decay_rate * t), abs=1e-8)

    def test_dephasing_commutes_with_sigma_z_evolution(self):
        # H = (w/2) sz rotates the coherence, dephasing only shrinks it
        w, t = 0.8, 2.0
        lay = HilbertLayout.qubit()
        spec = LindbladSpec(kappa_phi=0.2)
        plus = qubit_state(1 / math.sqrt(2), 1 / math.sqrt(2)).to_mixed()
        res = evolve_lindblad(OperatorMatrix(lay, 0.5 * w * SIGMA_Z), spec, plus, t, tol=1e-11)
        expected = 0.5 * np.exp(-1j * w * t) * math.exp(-0.2 * t)
        assert res.final_state.data[0, 1] == pytest.approx(expected, abs=1e-8)

    @settings(max_examples=4)
    @given(st.floats(0.03, 0.5))
    def test_thermal_fixed_point(self, temperature):
        p = PhysicalParams(temperature=temperature)
        spec = lindblad_spec(p)
        dim = 24
        lay = resonator_layout(dim)
        h = OperatorMatrix(lay, p.omega * np.diag(np.arange(dim, dtype=float)))
        res = evolve_lindblad(h, spec, fock(dim, 0).to_mixed(), 20 * p.tau_r)
        pops = np.diag(res.final_state.data).real
        assert np.abs(pops - thermal_diag(spec.n_th, dim)).max() < 1e-4
        assert res.max_trace_drift < 1e-8

    def test_requires_density_matrix(self):
        with pytest.raises(KindMismatchError):
            evolve_lindblad(number(3), LindbladSpec(), fock(3, 0), 1.0)

    def test_leakage_tracked(self):
        lay = resonator_layout(8)
        res = evolve_lindblad(OperatorMatrix(lay, np.zeros((8, 8))), LindbladSpec(kappa1=0.1), fock(8, 7).to_mixed(), 1.0)
        # top two levels (8 // 4) start fully populated
        assert res.max_leakage == pytest.approx(1.0)
