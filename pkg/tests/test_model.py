import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from csqueeze.errors import InconsistentParametersError
from csqueeze.gates import SqueezeParams, squeeze
from csqueeze.hilbert import hermitian_exponential
from csqueeze.model import (
    PhysicalParams,
    derive,
    driven_frame_hamiltonian,
    idle_hamiltonian,
    kerr_estimates,
    lab_hamiltonian,
    qubit_coupling,
    rotating_frame_hamiltonian,
    rwa_hamiltonian,
    validate_regimes,
)

TWO_PI = 2 * math.pi


class TestParams:
    def test_reference_values(self):
        p = PhysicalParams.reference()
        assert p.omega == pytest.approx(TWO_PI * 6)
        assert p.g_d == 0.05
        assert p.omega_d == pytest.approx(2 * (p.omega - p.chi))
        assert p.lab_theta == pytest.approx(-math.pi)

    @pytest.mark.parametrize(
        "field,value",
        [("omega", -1.0), ("chi", 0.0), ("gate_time", float("inf")), ("epsilon", 1.0), ("epsilon", -0.1), ("resonator_dim", 1), ("theta", float("nan"))],
    )
    def test_validation(self, field, value):
        with pytest.raises(InconsistentParametersError):
            PhysicalParams(**{field: value})

    def test_replace_tracks_default_drive(self):
        p = PhysicalParams().replace(chi=0.1)
        assert p.omega_d == pytest.approx(2 * (p.omega - 0.1))
        q = PhysicalParams(omega_d=75.0).replace(chi=0.1)
        assert q.omega_d == 75.0


class TestDerived:
    # oracle values computed by hand from the closed-form expressions
    def test_reference_set(self):
        d = derive(PhysicalParams())
        chi = TWO_PI * 0.008
        delta = -2 * chi
        lam = 0.05 * 0.15
        dt = delta * (1 - 0.5 * (lam / delta) ** 2)
        assert d.delta == pytest.approx(delta, rel=1e-11)
        assert d.delta_tilde == pytest.approx(dt, rel=1e-11)
        assert d.r_target == pytest.approx(1.5)
        assert d.phi_analytic == pytest.approx(abs(dt) * 200, rel=1e-11)
        # frozen
        assert d.delta == pytest.approx(-0.100531, abs=1e-6)
        assert d.delta_tilde == pytest.approx(-0.100251, abs=1e-6)
        assert d.phi_analytic == pytest.approx(20.05024, abs=1e-5)
        assert d.drive_ratio == pytest.approx(0.0746, abs=1e-4)
        assert d.perturbative

    @given(st.floats(0.001, 0.05), st.floats(0.0, 0.5), st.floats(10, 500))
    def test_stark_shift_reduces_detuning(self, chi, eps, t):
        d = derive(PhysicalParams(chi=chi, epsilon=eps, gate_time=t))
        # the second-order shift is only meaningful for a weak drive
        assume(d.drive_ratio < 1)
        assert abs(d.delta_tilde) <= abs(d.delta)
        assert d.phi_analytic == pytest.approx(abs(d.delta_tilde) * t)


class TestHamiltonians:
    p = PhysicalParams(resonator_dim=40)

    @pytest.mark.parametrize("builder", [rwa_hamiltonian, driven_frame_hamiltonian])
    def test_hermitian(self, builder):
        assert builder(self.p).hermiticity_error() < 1e-14

    def test_lab_hermitian(self):
        assert lab_hamiltonian(self.p, 3.7).hermiticity_error() < 1e-12

    def test_rwa_branches(self):
        p = self.p.replace(epsilon=0.1, gate_time=100.0)
        d = derive(p)
        dim = p.resonator_dim
        u = hermitian_exponential(rwa_hamiltonian(p), p.gate_time).data
        assert np.abs(u[dim:, dim:] - squeeze(SqueezeParams(d.r_target, p.theta), dim).data).max() < 1e-10
        expected0 = np.exp(-1j * d.delta_tilde * p.gate_time * np.arange(dim))
        assert np.allclose(np.diag(u[:dim, :dim]), expected0)
        assert np.abs(u[:dim, dim:]).max() == 0

    def test_driven_frame_structure(self):
        p = self.p
        d = derive(p)
        h = driven_frame_hamiltonian(p).data
        dim = p.resonator_dim
        diff = h[:dim, :dim] - h[dim:, dim:]
        assert np.allclose(diff, np.diag((d.omega_bar_0 - d.omega_bar_1) * np.arange(dim)))

    def test_idle_has_no_drive(self):
        for frame in ("rwa", "driven"):
            h = idle_hamiltonian(self.p, frame).data
            assert np.count_nonzero(h - np.diag(np.diag(h))) == 0
        with pytest.raises(ValueError):
            idle_hamiltonian(self.p, "lab")

    def test_rotating_frame_average_is_rwa(self):
        # mean over one drive period kills every counter-rotating term
        p = PhysicalParams(resonator_dim=12)
        hf = rotating_frame_hamiltonian(p)
        period = TWO_PI / p.omega_d
        ts = np.arange(32) * period / 32
        mean = sum(hf(t) for t in ts) / len(ts)
        assert np.abs(mean - driven_frame_hamiltonian(p).data).max() < 1e-12
        assert hf.max_frequency > p.omega_d

    def test_rotating_frame_hermitian(self):
        hf = rotating_frame_hamiltonian(PhysicalParams(resonator_dim=10))
        for t in (0.0, 0.013, 1.7):
            h = hf(t)
            assert np.abs(h - h.conj().T).max() < 1e-14

    def test_kerr_term(self):
        p = PhysicalParams(resonator_dim=6, kerr=0.01)
        h = rwa_hamiltonian(p.replace(epsilon=0.0)).data
        n = np.arange(6)
        assert np.allclose(np.diag(h)[6:], 0.005 * n * (n - 1))


class TestKerrAndRegimes:
    def test_qubit_coupling_oracle(self):
        p = PhysicalParams()
        ec = TWO_PI * 0.15
        dq = p.omega_q - p.omega
        g = math.sqrt(p.chi * dq * (dq - ec) / ec)
        est = kerr_estimates(p)
        assert est.g_q == pytest.approx(g, rel=1e-12)
        assert est.k_qubit_ratio == pytest.approx(-0.5 * ec * (g / dq) ** 4 / p.omega, rel=1e-12)
        # frozen
        assert est.g_q == pytest.approx(3.009, abs=1e-3)
        assert est.k_qubit_ratio == pytest.approx(-4.109e-5, abs=2e-8)
        assert est.dispersive_ratio == pytest.approx(0.2394, abs=1e-4)
        assert est.k_squid_ratio is None

    def test_negative_radicand(self):
        with pytest.raises(InconsistentParametersError):
            qubit_coupling(0.05, -12.0, 0.9)

    def test_reference_set_passes_default_checks(self):
        checks = validate_regimes(PhysicalParams())
        assert [c.passed for c in checks] == [True] * 4
        assert checks[0].value == pytest.approx(0.0746, abs=1e-4)

    def test_dispersive_check_fails_at_reference_point(self):
        checks = validate_regimes(PhysicalParams(), qubit_extras={})
        disp = [c for c in checks if c.check.startswith("dispersive")][0]
        assert not disp.passed

    def test_failures_reported(self):
        checks = validate_regimes(PhysicalParams(resonator_dim=20, temperature=1.0))
        failed = {c.check for c in checks if not c.passed}
        assert "truncation sinh^2(r)" in failed
        assert "thermal n_th resonator" in failed
        assert "weak_drive |g_d eps / delta|" not in failed
