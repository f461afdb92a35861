"""Eigenvalue ordering, decay-exponent fitting, and verdict reports."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fracspectra.fractal_measure import build_cantor_like, quadrature
from fracspectra.fractal_operator import WindowViolationError, assemble_dmu_kernel
from fracspectra.spectral_report import (
    DecayFit,
    InsufficientSpectrumError,
    SpectrumReport,
    assess_decay,
    eigen_spectrum,
    fit_decay_exponent,
    fit_upper_envelope,
    nonzero_part,
    order_by_modulus,
    snumber_exponent_check,
    theoretical_exponent,
    theoretical_snumber_exponent,
    write_spectrum_csv,
)

D_CANTOR = 0.6309297535714574  # log 2 / log 3, dimension of the middle-third set


@pytest.fixture(scope="module")
def cantor_ifs():
    return build_cantor_like(1, 2, 1.0 / 3.0, [[0.0], [2.0 / 3.0]])


@pytest.fixture(scope="module")
def measure_l1(cantor_ifs):
    return quadrature(cantor_ifs, 1)


@pytest.fixture(scope="module")
def measure_l5(cantor_ifs):
    return quadrature(cantor_ifs, 5)


@pytest.fixture(scope="module")
def measure_l7(cantor_ifs):
    return quadrature(cantor_ifs, 7)


def power_law(count: int, exponent: float, scale: float = 1.0) -> np.ndarray:
    return scale * np.arange(1, count + 1, dtype=float) ** (-exponent)


class TestOrdering:
    def test_modulus_descending_with_real_tiebreak(self):
        res = order_by_modulus([-1.0, 0.5, 1.0])
        assert np.array_equal(res, np.array([1.0, -1.0, 0.5], dtype=complex))

    def test_conjugate_pair_positive_imag_first(self):
        res = order_by_modulus([1.0 - 2.0j, 1.0 + 2.0j])
        assert res[0] == 1.0 + 2.0j and res[1] == 1.0 - 2.0j

    def test_empty_input(self):
        assert order_by_modulus([]).size == 0

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError, match="non-finite"):
            order_by_modulus([1.0, np.nan])

    def test_nonzero_part_drops_relative_dust(self):
        res = nonzero_part([1.0, 1e-15, 0.5])
        assert np.array_equal(res, np.array([1.0, 0.5], dtype=complex))

    def test_nonzero_part_of_zero_sequence_is_empty(self):
        assert nonzero_part(np.zeros(4)).size == 0

    @given(st.integers(0, 10**6), st.integers(2, 30))
    def test_ordering_is_nonincreasing_and_a_permutation(self, seed, count):
        rng = np.random.default_rng(seed)
        vals = rng.standard_normal(count) + 1j * rng.standard_normal(count)
        res = order_by_modulus(vals)
        mods = np.abs(res)
        assert np.all(np.diff(mods) <= 1e-15 * mods[0])
        assert np.allclose(np.sort_complex(res), np.sort_complex(vals))


class TestEigenSpectrum:
    def test_diagonal_two_by_two(self):
        res = eigen_spectrum(np.diag([1.0, 0.5]))
        assert np.allclose(res, [1.0, 0.5])
        assert res.dtype == np.complex128
        assert np.all(res.imag == 0.0)

    def test_two_atom_kernel_matrix_closed_form(self, measure_l1):
        # symmetric 2x2 with equal diagonal: eigenvalues are diag +- offdiag
        op = assemble_dmu_kernel(measure_l1, 0.45)
        res = eigen_spectrum(op)
        hi = op.matrix[0, 0] + op.matrix[0, 1]
        lo = op.matrix[0, 0] - op.matrix[0, 1]
        assert np.all(res.imag == 0.0)
        assert res.real == pytest.approx([hi, lo], rel=1e-12)
        assert res.real[1] > 0.0

    def test_zero_matrix_all_zero_empty_nonzero_part(self):
        res = eigen_spectrum(np.zeros((5, 5)))
        assert res.size == 5
        assert np.all(res == 0.0)
        assert nonzero_part(res).size == 0

    def test_complex_tiebreak_on_rotation_matrix(self):
        res = eigen_spectrum(np.array([[0.0, 1.0], [-1.0, 0.0]]))
        assert np.allclose(res, [1.0j, -1.0j], atol=1e-14)

    def test_flagged_symmetric_operator_is_real(self, measure_l5):
        op = assemble_dmu_kernel(measure_l5, 0.45)
        res = eigen_spectrum(op)
        assert np.all(res.imag == 0.0)
        ref = np.sort(np.linalg.eigvalsh(op.matrix))[::-1]
        assert np.allclose(res.real, ref, rtol=1e-10, atol=1e-14 * ref[0])

    def test_residual_certificate_failure_carries_provenance(self, measure_l5):
        op = assemble_dmu_kernel(measure_l5, 0.45)
        with pytest.raises(RuntimeError, match="kernel-gram"):
            eigen_spectrum(op, residual_tol=0.0)

    def test_residual_certificate_can_be_skipped(self, measure_l5):
        op = assemble_dmu_kernel(measure_l5, 0.45)
        res = eigen_spectrum(op, residual_tol=None)
        assert res.size == op.matrix.shape[0]

    def test_non_square_rejected(self):
        with pytest.raises(ValueError, match="square"):
            eigen_spectrum(np.ones((2, 3)))

    def test_non_finite_rejected(self):
        mat = np.eye(3)
        mat[1, 1] = np.inf
        with pytest.raises(ValueError, match="non-finite"):
            eigen_spectrum(mat)

    def test_empty_matrix(self):
        assert eigen_spectrum(np.zeros((0, 0))).size == 0

    def test_forced_general_path_matches_symmetric_path(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((6, 6))
        sym = (a + a.T) / 2.0
        hermitian = eigen_spectrum(sym)
        general = eigen_spectrum(sym, symmetric=False)
        assert np.allclose(hermitian, general, atol=1e-12 * np.abs(hermitian[0]))

    @given(st.integers(0, 10**6), st.integers(2, 8))
    def test_symmetric_path_spectra_are_real_and_ordered(self, seed, n):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((n, n))
        res = eigen_spectrum((a + a.T) / 2.0)
        assert np.all(res.imag == 0.0)
        mods = np.abs(res)
        assert np.all(np.diff(mods) <= 1e-12 * max(mods[0], 1e-300))

    @given(st.integers(0, 10**6), st.integers(2, 6))
    def test_general_path_matches_reference_eigensolver(self, seed, n):
        rng = np.random.default_rng(seed)
        mat = rng.standard_normal((n, n))
        mine = eigen_spectrum(mat, symmetric=False)
        ref = order_by_modulus(np.linalg.eigvals(mat))
        assert np.allclose(mine, ref, atol=1e-9 * max(np.abs(ref[0]), 1.0))


class TestTheoreticalExponents:
    def test_cantor_hilbert_rate(self):
        val = theoretical_exponent(1, D_CANTOR, 0.45, 2.0)
        assert val == pytest.approx(-0.8415037499278844, abs=1e-9)

    def test_upper_boundary_gives_minus_one(self):
        assert theoretical_exponent(1, D_CANTOR, 0.5, 2.0) == -1.0

    def test_cantor_p15_rate(self):
        val = theoretical_exponent(1, D_CANTOR, 0.8 / 1.5, 1.5)
        assert val == pytest.approx(-0.6830074998557688, abs=1e-9)

    def test_snumber_rate(self):
        val = theoretical_snumber_exponent(1, D_CANTOR, 0.45, 2.0)
        assert val == pytest.approx(-0.4207518749639422, abs=1e-9)

    def test_snumber_boundary_collapses_to_minus_inverse_p(self):
        assert theoretical_snumber_exponent(1, D_CANTOR, 0.5, 2.0) == -0.5

    def test_snumber_rate_is_half_the_eigen_rate_at_p_two(self):
        half = theoretical_exponent(1, D_CANTOR, 0.45, 2.0) / 2.0
        assert theoretical_snumber_exponent(1, D_CANTOR, 0.45, 2.0) == pytest.approx(
            half, abs=1e-12
        )

    @pytest.mark.parametrize(
        "n, d, s, p",
        [
            (1, D_CANTOR, 0.18, 2.0),  # s*p below n - d
            (1, D_CANTOR, 0.60, 2.0),  # s*p above n
            (1, 1.2, 0.45, 2.0),  # dimension outside (0, n)
            (1, D_CANTOR, 0.45, -1.0),  # nonpositive integrability
        ],
    )
    def test_window_violations(self, n, d, s, p):
        with pytest.raises(WindowViolationError):
            theoretical_exponent(n, d, s, p)
        with pytest.raises(WindowViolationError):
            theoretical_snumber_exponent(n, d, s, p)


class TestFitDecayExponent:
    def test_exact_power_law_recovered(self):
        fit = fit_decay_exponent(power_law(1000, 0.8415))
        assert fit.k_lo == 10 and fit.k_hi == 200
        assert fit.slope == pytest.approx(-0.8415, abs=1e-9)
        assert abs(fit.intercept) < 1e-9
        assert fit.residual < 1e-12
        assert fit.kind == "least-squares" and fit.quantile is None

    def test_default_window_caps_at_400(self):
        fit = fit_decay_exponent(power_law(3000, 0.5))
        assert fit.k_hi == 400

    def test_explicit_window_clipped_to_count(self):
        fit = fit_decay_exponent(power_law(150, 0.5), k_hi=200)
        assert fit.k_hi == 150

    def test_perturbed_power_law_within_centiband(self):
        k = np.arange(1, 1001, dtype=float)
        vals = 3.7 * k**-0.8415 * (1.0 + 0.05 * (-1.0) ** np.arange(1, 1001))
        fit = fit_decay_exponent(vals)
        assert fit.slope == pytest.approx(-0.8415, abs=0.01)
        assert fit.intercept == pytest.approx(math.log(3.7), abs=0.05)

    def test_alternating_signs_fit_the_moduli(self):
        k = np.arange(1, 501, dtype=float)
        signed = (-1.0) ** np.arange(1, 501) * k**-0.8
        assert fit_decay_exponent(signed).slope == fit_decay_exponent(k**-0.8).slope

    def test_too_few_values(self):
        with pytest.raises(InsufficientSpectrumError, match="at least 30"):
            fit_decay_exponent(power_law(20, 0.5))

    def test_relative_dust_does_not_count_as_spectrum(self):
        vals = np.concatenate([power_law(25, 0.5), np.full(100, 1e-20)])
        with pytest.raises(InsufficientSpectrumError, match="at least 30"):
            fit_decay_exponent(vals)

    def test_degenerate_default_window(self):
        # 40 nonzero values put the default upper edge at 8, below k_lo = 10
        with pytest.raises(InsufficientSpectrumError, match="fewer than 5"):
            fit_decay_exponent(power_law(40, 0.5))

    def test_window_start_must_be_positive(self):
        with pytest.raises(ValueError, match="rank 1"):
            fit_decay_exponent(power_law(1000, 0.5), k_lo=0)

    @given(
        st.floats(0.3, 1.5),
        st.floats(-4.0, 4.0),
    )
    def test_power_law_recovery_property(self, exponent, log_scale):
        vals = power_law(400, exponent, scale=math.exp(log_scale))
        fit = fit_decay_exponent(vals)
        assert fit.slope == pytest.approx(-exponent, abs=1e-6)
        assert fit.intercept == pytest.approx(log_scale, abs=1e-6)

    @given(st.floats(1e-3, 1e3), st.integers(0, 10**6))
    def test_scaling_moves_only_the_intercept(self, scale, seed):
        rng = np.random.default_rng(seed)
        k = np.arange(1, 301, dtype=float)
        vals = k**-0.7 * (1.0 + 0.2 * rng.uniform(-1.0, 1.0, 300))
        base = fit_decay_exponent(vals)
        scaled = fit_decay_exponent(scale * vals)
        assert scaled.slope == pytest.approx(base.slope, abs=1e-12)
        assert scaled.intercept - base.intercept == pytest.approx(
            math.log(scale), abs=1e-9
        )
        assert np.allclose(
            order_by_modulus(scale * vals), scale * order_by_modulus(vals)
        )


class TestUpperEnvelope:
    def test_exact_power_law_envelope_equals_line(self):
        fit = fit_upper_envelope(power_law(500, 0.9))
        assert fit.kind == "quantile-envelope" and fit.quantile == 0.95
        assert fit.slope == pytest.approx(-0.9, abs=1e-8)
        assert abs(fit.intercept) < 1e-8
        assert fit.residual < 1e-10

    def test_envelope_sits_above_downward_noise(self):
        rng = np.random.default_rng(7)
        k = np.arange(1, 501, dtype=float)
        vals = np.exp(-0.8 * np.log(k) - 0.5 * rng.uniform(0.0, 1.0, 500))
        env = fit_upper_envelope(vals)
        ls = fit_decay_exponent(vals)
        assert env.slope == pytest.approx(-0.8, abs=0.08)
        assert env.intercept > ls.intercept
        # at the 0.95 quantile only a ~5 percent sliver may exceed the line
        mods = np.abs(nonzero_part(vals))
        x = np.log(np.arange(env.k_lo, env.k_hi + 1, dtype=float))
        y = np.log(mods[env.k_lo - 1 : env.k_hi])
        above = int(np.count_nonzero(y > env.intercept + env.slope * x + 1e-9))
        assert above <= math.ceil(0.05 * x.size) + 1

    def test_quantile_validation(self):
        with pytest.raises(ValueError, match="quantile"):
            fit_upper_envelope(power_law(500, 0.9), quantile=1.0)

    def test_insufficient_spectrum_shares_the_precondition(self):
        with pytest.raises(InsufficientSpectrumError):
            fit_upper_envelope(power_law(20, 0.9))

    @given(st.floats(0.3, 1.5))
    def test_envelope_matches_least_squares_on_pure_power_laws(self, exponent):
        vals = power_law(400, exponent)
        env = fit_upper_envelope(vals)
        ls = fit_decay_exponent(vals)
        assert env.slope == pytest.approx(ls.slope, abs=1e-6)


class TestAssessDecay:
    def test_two_sided_pass(self):
        rep = assess_decay(
            power_law(1000, 0.8415),
            theoretical=-0.8415037499278844,
            tolerance=0.08,
            provenance={"stage": "unit-test"},
        )
        assert rep.passed and rep.verdict == "PASS"
        assert rep.comparison == "two-sided"
        assert rep.count == 1000 and rep.n_zero == 0
        assert rep.provenance == {"stage": "unit-test"}

    def test_two_sided_fail(self):
        rep = assess_decay(power_law(1000, 0.5), theoretical=-0.8415, tolerance=0.08)
        assert not rep.passed and rep.verdict == "FAIL"

    def test_upper_comparison_accepts_faster_decay(self):
        rep = assess_decay(
            power_law(1000, 0.9),
            theoretical=-0.6830074998557688,
            tolerance=0.08,
            comparison="upper",
        )
        assert rep.passed
        assert rep.fit.kind == "quantile-envelope"

    def test_upper_comparison_rejects_slower_decay(self):
        rep = assess_decay(
            power_law(1000, 0.5),
            theoretical=-0.6830074998557688,
            tolerance=0.08,
            comparison="upper",
        )
        assert not rep.passed

    def test_unknown_comparison(self):
        with pytest.raises(ValueError, match="comparison"):
            assess_decay(power_law(1000, 0.9), theoretical=-1.0, tolerance=0.1,
                         comparison="lower")

    def test_as_dict_is_json_ready(self):
        rep = assess_decay(
            power_law(1000, 0.8415), theoretical=-0.8415, tolerance=0.08
        )
        payload = rep.as_dict()
        text = json.dumps(payload, sort_keys=True)
        assert '"verdict": "PASS"' in text
        assert payload["window"] == [10, 200]
        assert payload["exponents"]["theoretical"] == -0.8415
        assert payload["fit_kind"] == "least-squares"


class TestSpectrumReportInvariants:
    @staticmethod
    def _fit(slope: float = -1.0) -> DecayFit:
        return DecayFit(1, 2, slope, 0.0, 0.0)

    def test_rejects_misordered_eigenvalues(self):
        with pytest.raises(ValueError, match="nonincreasing"):
            SpectrumReport(
                eigenvalues=np.array([1.0, 2.0], dtype=complex),
                fit=self._fit(),
                theoretical=-1.0,
                tolerance=0.1,
                comparison="two-sided",
                passed=True,
            )

    def test_rejects_window_outside_count(self):
        with pytest.raises(ValueError, match="inside"):
            SpectrumReport(
                eigenvalues=np.array([2.0, 1.0], dtype=complex),
                fit=DecayFit(1, 5, -1.0, 0.0, 0.0),
                theoretical=-1.0,
                tolerance=0.1,
                comparison="two-sided",
                passed=True,
            )

    def test_rejects_inconsistent_verdict(self):
        with pytest.raises(ValueError, match="inconsistent"):
            SpectrumReport(
                eigenvalues=np.array([2.0, 1.0], dtype=complex),
                fit=self._fit(-1.0),
                theoretical=-1.0,
                tolerance=0.01,
                comparison="two-sided",
                passed=False,
            )

    def test_rejects_empty_spectrum(self):
        with pytest.raises(ValueError, match="at least one"):
            SpectrumReport(
                eigenvalues=np.zeros(0, dtype=complex),
                fit=self._fit(),
                theoretical=-1.0,
                tolerance=0.1,
                comparison="two-sided",
                passed=True,
            )

    def test_rejects_negative_tolerance(self):
        with pytest.raises(ValueError, match="tolerance"):
            SpectrumReport(
                eigenvalues=np.array([2.0, 1.0], dtype=complex),
                fit=self._fit(),
                theoretical=-1.0,
                tolerance=-0.1,
                comparison="two-sided",
                passed=True,
            )

    def test_rejects_unknown_comparison(self):
        with pytest.raises(ValueError, match="comparison"):
            SpectrumReport(
                eigenvalues=np.array([2.0, 1.0], dtype=complex),
                fit=self._fit(),
                theoretical=-1.0,
                tolerance=0.1,
                comparison="sideways",
                passed=True,
            )

    def test_decay_fit_window_must_increase(self):
        with pytest.raises(ValueError, match="not increasing"):
            DecayFit(5, 5, -1.0, 0.0, 0.0)

    def test_n_zero_counts_the_dropped_tail(self):
        vals = np.concatenate([power_law(40, 0.5), np.full(3, 1e-20)])
        rep = assess_decay(
            order_by_modulus(vals),
            theoretical=-0.5,
            tolerance=0.1,
            k_lo=2,
            k_hi=40,
        )
        assert rep.count == 43 and rep.n_zero == 3


class TestSnumberExponentCheck:
    def test_only_hilbert_case_supported(self, measure_l7):
        with pytest.raises(NotImplementedError, match="p = 2"):
            snumber_exponent_check(measure_l7, 0.45, 1.5)

    def test_transference_halves_the_eigenvalue_slope(self, measure_l7):
        # singular values squared are the kernel-matrix eigenvalues, so on a
        # shared window the fitted slope is exactly half
        rep = snumber_exponent_check(
            measure_l7, 0.45, 2.0, k_lo=10, k_hi=25, tolerance=0.5
        )
        op = assemble_dmu_kernel(measure_l7, 0.45)
        eig_fit = fit_decay_exponent(eigen_spectrum(op), k_lo=10, k_hi=25)
        assert rep.fit.slope == pytest.approx(eig_fit.slope / 2.0, abs=1e-6)
        assert rep.passed
        assert rep.comparison == "two-sided"
        assert rep.theoretical == pytest.approx(-0.4207518749639422, abs=1e-9)
        assert rep.provenance["quantity"] == "approximation-numbers"
        assert rep.provenance["assembly"]["kind"] == "trace-restriction"
        assert np.all(rep.eigenvalues.imag == 0.0)
        assert np.all(rep.eigenvalues.real >= 0.0)


class TestSpectrumCsv:
    def test_exact_rows_and_byte_determinism(self, tmp_path):
        path_a = tmp_path / "a.csv"
        path_b = tmp_path / "b.csv"
        vals = np.array([1.0, 3.0 + 4.0j])
        write_spectrum_csv(vals, path_a)
        write_spectrum_csv(vals, path_b)
        text = path_a.read_text()
        assert text.splitlines()[0] == "k,re,im,modulus"
        assert text.splitlines()[1] == "1,1.0,0.0,1.0"
        assert text.splitlines()[2] == "2,3.0,4.0,5.0"
        assert path_a.read_bytes() == path_b.read_bytes()
