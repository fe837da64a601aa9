import numpy as np
import pytest

from helpers import fd_grad, rel_err, transform_matrix
from wavedistill.constraints import (
    PenaltyBreakdown,
    penalty_grad,
    sparsity_term,
    wavelet_loss,
    wavelet_penalties,
)
from wavedistill.errors import InvalidArgumentError
from wavedistill.filters import make_pair, perturb, standard_bank
from wavedistill.transform import TransformConfig, dwt1d

SQRT2 = np.sqrt(2.0)


class TestWaveletPenalties:
    def test_haar_exact(self):
        breakdown = wavelet_penalties(standard_bank("haar"))
        for name in ("sum_h", "sum_g", "unit_norm", "cmf", "shift_orth"):
            assert getattr(breakdown, name) < 1e-15

    def test_standard_banks_near_zero(self, bank):
        assert wavelet_penalties(bank).validity < 1e-8

    def test_hand_evaluated_invalid_filter(self):
        # h = [1, 0]: sum penalty (1-sqrt2)^2, unit norm satisfied,
        # no nonzero shift terms, and the CMF grid value is
        # |H|^2 + |H(+pi)|^2 = 2 at every w, so only sum terms fire.
        breakdown = wavelet_penalties(make_pair([1.0, 0.0]))
        assert breakdown.sum_h == pytest.approx((1 - SQRT2) ** 2, abs=1e-15)
        assert breakdown.unit_norm == 0.0
        assert breakdown.shift_orth == 0.0

    def test_total_is_field_sum(self, rng):
        pair = make_pair(rng.normal(size=10))
        breakdown = wavelet_penalties(pair)
        breakdown.sparsity = 1.25
        fields = [getattr(breakdown, n) for n in PenaltyBreakdown.FIELDS]
        assert breakdown.total == pytest.approx(sum(fields), rel=1e-15)
        assert all(v >= 0 for v in fields)

    def test_shift_invariant_fields(self, bank):
        # circular tap shifts preserve the sum, norm, and spectral-modulus
        # penalties (the literal-overlap shift_orth term is not invariant)
        base = wavelet_penalties(bank)
        shifted = wavelet_penalties(make_pair(np.roll(bank.lowpass, 1)))
        for name in ("sum_h", "sum_g", "unit_norm", "cmf"):
            assert getattr(shifted, name) == pytest.approx(
                getattr(base, name), abs=1e-12)

    def test_zero_mean_consequence(self, bank):
        breakdown = wavelet_penalties(bank)
        if breakdown.sum_h < 1e-10 and breakdown.shift_orth < 1e-10:
            assert breakdown.sum_g < 1e-8


class TestSparsityTerm:
    def test_zero_coeffs(self):
        pair = standard_bank("haar")
        coeffs = dwt1d(np.zeros(8), pair, TransformConfig(2))
        assert sparsity_term(coeffs, 3.7) == 0.0

    def test_hand_value(self):
        pair = standard_bank("haar")
        coeffs = dwt1d(np.zeros(4), pair, TransformConfig(1))
        coeffs.approx = np.array([1.0, -2.0])
        coeffs.details[0] = np.array([3.0, 0.0])
        assert sparsity_term(coeffs, 0.5) == pytest.approx(3.0)

    def test_matches_basis_matrix_oracle(self, rng):
        pair = standard_bank("db5")
        x = rng.normal(size=32)
        coeffs = dwt1d(x, pair, TransformConfig(2))
        want = 0.005 * np.abs(transform_matrix(pair, 32, 2) @ x).sum()
        assert sparsity_term(coeffs, 0.005) == pytest.approx(want, rel=1e-10)

    def test_negative_lambda(self):
        pair = standard_bank("haar")
        coeffs = dwt1d(np.zeros(4), pair, TransformConfig(1))
        with pytest.raises(InvalidArgumentError):
            sparsity_term(coeffs, -1.0)


class TestWaveletLoss:
    def test_constant_signal_haar(self):
        pair = standard_bank("haar")
        breakdown = wavelet_loss(pair, np.ones(8), 1.0, TransformConfig(1))
        # details vanish, so the l1 mass is entirely the approximation band
        coeffs = dwt1d(np.ones(8), pair, TransformConfig(1))
        assert breakdown.total == pytest.approx(
            np.abs(coeffs.approx).sum(), abs=1e-12)

    def test_db5_validity_near_zero(self, rng):
        pair = standard_bank("db5")
        breakdown = wavelet_loss(pair, rng.normal(size=64), 0.005,
                                 TransformConfig(3))
        assert breakdown.total - breakdown.sparsity < 1e-8

    def test_non_sparsity_fields_independent_of_signal(self, rng):
        pair = perturb(standard_bank("db5"), 0.1, seed=5)
        config = TransformConfig(2)
        a = wavelet_loss(pair, rng.normal(size=16), 0.01, config)
        b = wavelet_loss(pair, rng.normal(size=16), 0.01, config)
        for name in ("sum_h", "sum_g", "unit_norm", "cmf", "shift_orth"):
            assert getattr(a, name) == getattr(b, name)


class TestPenaltyGrad:
    def test_stationary_at_haar(self):
        assert np.linalg.norm(penalty_grad(standard_bank("haar"))) < 1e-12

    def test_matches_finite_differences(self, rng):
        for _ in range(5):
            h = rng.normal(size=10) * 0.5
            grad = penalty_grad(make_pair(h))
            want = fd_grad(
                lambda taps: wavelet_penalties(make_pair(taps)).validity, h)
            assert rel_err(grad, want) < 1e-5

    def test_norm_term_closed_form(self):
        # gradient of (||h||^2 - 1)^2 alone is 4 (||h||^2 - 1) h; isolate it
        # by comparing two filters that differ only in scale
        h = np.array([1.0, 0.0, 1.0, 0.0])  # ||h||^2 = 2
        contribution = 4.0 * (2.0 - 1.0) * h
        full = penalty_grad(make_pair(h))
        without_norm = fd_grad(
            lambda taps: (wavelet_penalties(make_pair(taps)).validity
                          - (taps @ taps - 1.0) ** 2), h)
        assert rel_err(full - without_norm, contribution) < 1e-4
