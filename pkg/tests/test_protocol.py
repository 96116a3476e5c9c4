import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from csqueeze import protocol
from csqueeze.errors import DegenerateCodeError, InvalidStateError
from csqueeze.model import PhysicalParams, derive
from csqueeze.protocol import (
    EQUATOR_PROBE,
    BlochPoint,
    ProtocolReport,
    SweepSummary,
    average_fidelity_exact,
    bloch_grid,
    bloch_sweep,
    branch_probability_plus,
    chi_series,
    chi_states,
    closed_form_encoded,
    code_normalizers,
    compensated_encode,
    compensation_wait,
    ideal_encode,
    optimize_compensation_angle,
    series_mismatch,
)

CSV_COLUMNS = ["theta_b", "phi_b", "p_plus", "p_minus", "f_plus", "f_minus", "f_avg", "purity_plus", "purity_minus", "phi_used"]


def series_fidelity_oracle(r, p_z, dim=400):
    """Branch statistics built only from the closed-form Fock series."""
    plus, minus = chi_series(r, 0.0, dim)
    minus = -minus  # the series carries an explicit -1 on the odd state
    cp, cm = code_normalizers(r)
    theta_b = math.acos(max(-1.0, min(1.0, p_z)))
    a, b = math.cos(theta_b / 2), math.sin(theta_b / 2)
    total = 0.0
    for top, tgt in ((a * cp * plus + b * cm * minus, a * plus + b * minus), (a * cm * minus + b * cp * plus, a * minus + b * plus)):
        prob = np.vdot(top, top).real / 2
        if prob > 0:
            total += prob * abs(np.vdot(tgt, top)) ** 2 / np.vdot(top, top).real
    return total


class TestBloch:
    def test_amplitudes(self):
        b = BlochPoint(math.pi / 2, math.pi / 2)
        assert b.alpha == pytest.approx(1 / math.sqrt(2))
        assert b.beta == pytest.approx(1j / math.sqrt(2))
        assert b.p_z == pytest.approx(0.0, abs=1e-15)
        assert BlochPoint(0.0).p_z == 1.0
        assert np.linalg.norm(b.qubit_vector()) == pytest.approx(1.0)

    def test_non_finite_rejected(self):
        with pytest.raises(InvalidStateError):
            BlochPoint(float("nan"))


class TestCodeStates:
    @pytest.mark.parametrize("r", [0.5, 1.0, 1.5])
    def test_orthonormal(self, r):
        code = chi_states(r, 0.3, 90)
        assert abs(np.vdot(code.chi_plus.data, code.chi_minus.data)) < 1e-12
        cp, cm = code_normalizers(r)
        assert cp**2 == pytest.approx(1 + 1 / math.sqrt(math.cosh(2 * r)))
        assert cm**2 == pytest.approx(1 - 1 / math.sqrt(math.cosh(2 * r)))

    def test_matches_series_at_large_dim(self):
        info = series_mismatch(chi_states(1.5, 0.0, 400))
        assert info["plus"]["max_abs_error"] < 1e-8
        assert info["minus"]["max_abs_error"] < 1e-8
        assert info["plus"]["global_phase"] == pytest.approx(1.0)
        assert info["minus"]["global_phase"] == pytest.approx(-1.0)

    def test_truncation_visible_at_n90(self):
        # r = 1.5 leaves about 1e-5 of the norm above level 90
        info = series_mismatch(chi_states(1.5, 0.0, 90))
        assert 1e-4 < info["plus"]["max_abs_error"] < 1e-2

    @pytest.mark.parametrize("r", [0.0, -0.3, float("inf")])
    def test_degenerate(self, r):
        with pytest.raises(DegenerateCodeError):
            chi_states(r, 0.0, 40)

    @given(st.floats(0.2, 1.2), st.floats(-math.pi, math.pi))
    @settings(max_examples=10)
    def test_superparity_support(self, r, theta):
        code = chi_states(r, theta, 80)
        n = np.arange(80)
        assert np.abs(code.chi_plus.data[n % 4 != 0]).max() < 1e-10
        assert np.abs(code.chi_minus.data[n % 4 != 2]).max() < 1e-10


class TestFidelityLaw:
    @given(st.floats(0.3, 1.5), st.floats(-1.0, 1.0))
    @settings(max_examples=10)
    def test_matches_series_oracle(self, r, p_z):
        assert average_fidelity_exact(r, p_z) == pytest.approx(series_fidelity_oracle(r, p_z), abs=1e-8)

    def test_frozen_reference_value(self):
        assert average_fidelity_exact(1.5, 0.0) == pytest.approx(0.9745187, abs=1e-7)

    @pytest.mark.parametrize("r", [0.5, 1.0, 1.5, 2.0])
    def test_poles_exact(self, r):
        assert average_fidelity_exact(r, 1.0) == 1.0
        assert average_fidelity_exact(r, -1.0) == 1.0

    @given(st.floats(0.3, 1.5), st.floats(-1.0, 1.0))
    @settings(max_examples=10)
    def test_probability(self, r, p_z):
        plus, minus = chi_series(r, 0.0, 400)
        cp, cm = code_normalizers(r)
        theta_b = math.acos(p_z)
        top = math.cos(theta_b / 2) * cp * plus - math.sin(theta_b / 2) * cm * minus
        assert branch_probability_plus(r, p_z) == pytest.approx(np.vdot(top, top).real / 2, abs=1e-8)


class TestEncoding:
    def test_ideal_sequence_equals_closed_form(self):
        for b in (BlochPoint(0.3, 1.0), EQUATOR_PROBE, BlochPoint(2.5, -0.4)):
            u = ideal_encode(b, 1.0, 0.2, 120).data
            v = closed_form_encoded(b, 1.0, 0.2, 120).data
            assert abs(np.vdot(u, v)) ** 2 == pytest.approx(1.0, abs=1e-10)

    @given(st.floats(0.0, 200.0), st.floats(0.01, 1.0))
    def test_wait_completes_a_turn(self, phi, delta):
        tau = compensation_wait(phi, -delta)
        assert 0 <= tau < 2 * math.pi / delta + 1e-9
        turns = (delta * tau + phi) / (2 * math.pi)
        assert turns == pytest.approx(round(turns), abs=1e-9)

    def test_reference_wait(self):
        assert compensation_wait(derive(PhysicalParams()).phi_analytic, derive(PhysicalParams()).delta) == pytest.approx(50.557, abs=1e-3)

    def test_ideal_backend_follows_the_law(self):
        p = PhysicalParams(resonator_dim=200, epsilon=0.1)
        for b in (BlochPoint(0.0), BlochPoint(1.1, 0.7), EQUATOR_PROBE):
            rep = compensated_encode(b, p, backend="ideal").report
            assert rep.f_avg == pytest.approx(average_fidelity_exact(1.0, b.p_z), abs=1e-8)
            assert rep.p_plus == pytest.approx(branch_probability_plus(1.0, b.p_z), abs=1e-8)

    def test_rwa_unitary_equals_ideal(self):
        p = PhysicalParams()
        for b in (BlochPoint(0.0), EQUATOR_PROBE):
            ideal = compensated_encode(b, p, backend="ideal").report
            rwa = compensated_encode(b, p, backend="unitary", frame="rwa").report
            assert rwa.f_avg == pytest.approx(ideal.f_avg, abs=1e-9)

    def test_report_columns(self):
        rep = compensated_encode(BlochPoint(0.4), PhysicalParams(resonator_dim=60, epsilon=0.1), backend="ideal").report
        assert list(rep.row()) == CSV_COLUMNS
        assert rep.wait_time > 0
        d = rep.as_dict()
        assert d["bloch"] == {"theta_b": 0.4, "phi_b": 0.0}

    def test_zero_drive_is_degenerate(self):
        with pytest.raises(DegenerateCodeError):
            compensated_encode(EQUATOR_PROBE, PhysicalParams(epsilon=0.0))

    def test_unknown_backend(self):
        with pytest.raises(ValueError):
            compensated_encode(EQUATOR_PROBE, PhysicalParams(resonator_dim=40, epsilon=0.1), backend="magic")

    def test_lossless_dominates_lossy(self):
        p = PhysicalParams(resonator_dim=40, epsilon=0.1)
        for b in (BlochPoint(0.0), EQUATOR_PROBE):
            closed = compensated_encode(b, p, backend="unitary", frame="rwa").report
            lossy = compensated_encode(b, p, backend="lindblad", frame="rwa").report
            assert lossy.f_avg <= closed.f_avg + 1e-9
            assert lossy.max_trace_drift < 1e-8
            assert lossy.purity_plus < 1.0


class TestOptimizer:
    def test_rwa_optimum_is_analytic(self):
        p = PhysicalParams(resonator_dim=60, epsilon=0.1)
        res = optimize_compensation_angle(p, backend="unitary", frame="rwa", grid_points=31)
        assert res.phi_star == pytest.approx(derive(p).phi_analytic, abs=1e-3)
        assert res.f_at_star == pytest.approx(average_fidelity_exact(1.0, 0.0), abs=1e-6)
        assert len(res.landscape) == 31
        assert not res.degenerate

    def test_degenerate_without_drive(self):
        res = optimize_compensation_angle(PhysicalParams(epsilon=0.0))
        assert res.degenerate
        assert math.isnan(res.f_at_star)


class TestSweep:
    p = PhysicalParams(resonator_dim=50, epsilon=0.1)

    def test_order_and_threads(self):
        grid = bloch_grid([0.0, 1.0, math.pi], [0.0, 2.0])
        one = bloch_sweep(self.p, grid, backend="ideal")
        two = bloch_sweep(self.p, grid, backend="ideal", jobs=2)
        assert [r.bloch for r in one] == grid
        assert [r.row() for r in one] == [r.row() for r in two]

    def test_failures_are_marked(self, monkeypatch):
        real = protocol.compensated_encode

        def flaky(point, *args, **kwargs):
            if point.theta_b == 1.0:
                raise DegenerateCodeError("boom")
            return real(point, *args, **kwargs)

        monkeypatch.setattr(protocol, "compensated_encode", flaky)
        reps = bloch_sweep(self.p, bloch_grid([0.0, 1.0], [0.0]), backend="ideal")
        assert not reps[0].failed
        assert reps[1].failed and "boom" in reps[1].error
        assert math.isnan(reps[1].f_avg)

    def test_summary(self):
        reps = bloch_sweep(self.p, bloch_grid([0.0, math.pi / 2], [0.0, 1.0]), backend="ideal")
        reps.append(ProtocolReport.failure(BlochPoint(0.0), "ideal", 0.0, "x"))
        table = SweepSummary(reps).by_latitude()
        assert set(table) == {0.0, round(math.pi / 2, 12)}
        assert table[0.0]["f_min"] == pytest.approx(1.0)
