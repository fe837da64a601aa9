import numpy as np
import pytest

from helpers import coeffs_inner, fd_grad, rel_err, transform_matrix
from wavedistill.errors import ShapeError
from wavedistill.filters import make_pair, standard_bank
from wavedistill.transform import (
    TransformConfig,
    dwt1d,
    dwt2d,
    dwt_grad,
    idwt1d,
    idwt2d,
)


class TestDwt1d:
    def test_constant_signal_haar(self):
        coeffs = dwt1d(np.ones(4), standard_bank("haar"), TransformConfig(1))
        np.testing.assert_allclose(coeffs.approx, [np.sqrt(2)] * 2, atol=1e-15)
        np.testing.assert_allclose(coeffs.details[0], [0, 0], atol=1e-15)

    def test_matches_basis_matrix_oracle(self, bank, rng):
        for length, levels in ((8, 1), (16, 2), (64, 3)):
            x = rng.normal(size=length)
            got = dwt1d(x, bank, TransformConfig(levels)).to_vector()
            want = transform_matrix(bank, length, levels) @ x
            assert rel_err(got, want) < 1e-10

    def test_parseval(self, bank, rng):
        x = rng.normal(size=64)
        coeffs = dwt1d(x, bank, TransformConfig(3))
        assert abs(np.linalg.norm(coeffs.to_vector()) - np.linalg.norm(x)) < 1e-10

    def test_critical_sampling(self, bank, rng):
        x = rng.normal(size=32)
        assert dwt1d(x, bank, TransformConfig(2)).coeff_count() == 32

    def test_band_lengths(self, rng):
        coeffs = dwt1d(rng.normal(size=64), standard_bank("db5"),
                       TransformConfig(3))
        assert [d.size for d in coeffs.details] == [32, 16, 8]
        assert coeffs.approx.size == 8

    def test_linearity(self, bank, rng):
        x, y = rng.normal(size=(2, 32))
        config = TransformConfig(2)
        lhs = dwt1d(2.5 * x - 1.5 * y, bank, config).to_vector()
        rhs = (2.5 * dwt1d(x, bank, config).to_vector()
               - 1.5 * dwt1d(y, bank, config).to_vector())
        assert rel_err(lhs, rhs) < 1e-12

    def test_non_dyadic_length_names_level(self):
        with pytest.raises(ShapeError, match="level 2"):
            dwt1d(np.zeros(6), standard_bank("haar"), TransformConfig(2))


class TestIdwt1d:
    def test_zero_coeffs(self):
        coeffs = dwt1d(np.ones(8), standard_bank("haar"), TransformConfig(2))
        zeros = coeffs.zeros_like()
        np.testing.assert_array_equal(idwt1d(zeros, standard_bank("haar")),
                                      np.zeros(8))

    def test_round_trip_haar(self):
        x = np.array([1.0, 2.0, 3.0, 4.0])
        pair = standard_bank("haar")
        coeffs = dwt1d(x, pair, TransformConfig(2))
        np.testing.assert_allclose(idwt1d(coeffs, pair), x, atol=1e-12)

    def test_round_trip_all_banks(self, bank, rng):
        x = rng.normal(size=64)
        coeffs = dwt1d(x, bank, TransformConfig(3))
        assert rel_err(idwt1d(coeffs, bank), x) < 1e-10

    def test_unit_coeff_gives_oracle_basis_vector(self, rng):
        # synthesis of a single detail coefficient reproduces the matching
        # row of the dense transform matrix (synthesis is its adjoint)
        pair = standard_bank("db5")
        length, levels = 16, 2
        template = dwt1d(np.zeros(length), pair, TransformConfig(levels))
        matrix = transform_matrix(pair, length, levels)
        vec = np.zeros(length)
        idx = length // 4 + 1  # inside the coarsest detail band
        vec[idx] = 1.0
        out = idwt1d(template.with_vector(vec), pair)
        assert rel_err(out, matrix[idx]) < 1e-10

    def test_band_mismatch(self):
        pair = standard_bank("haar")
        coeffs = dwt1d(np.ones(8), pair, TransformConfig(1))
        coeffs.details[0] = coeffs.details[0][:3]
        with pytest.raises(ShapeError):
            idwt1d(coeffs, pair)


class TestDwt2d:
    def test_constant_haar(self):
        coeffs = dwt2d(np.ones((4, 4)), standard_bank("haar"),
                       TransformConfig(1))
        np.testing.assert_allclose(coeffs.approx, np.full((2, 2), 2.0),
                                   atol=1e-15)
        for band in coeffs.details[0]:
            np.testing.assert_allclose(band, 0, atol=1e-15)

    def test_row_column_composition(self, rng):
        pair = standard_bank("db5")
        x = rng.normal(size=(8, 8))
        coeffs = dwt2d(x, pair, TransformConfig(1))
        config = TransformConfig(1)

        def rows_pass(mat, filt):
            picked = []
            for row in mat:
                c = dwt1d(row, pair, config)
                picked.append(c.approx if filt == "lo" else c.details[0])
            return np.array(picked)

        lo = rows_pass(x, "lo")
        hi = rows_pass(x, "hi")
        want = {
            "approx": rows_pass(lo.T, "lo").T,
            "hl": rows_pass(lo.T, "hi").T,
            "lh": rows_pass(hi.T, "lo").T,
            "hh": rows_pass(hi.T, "hi").T,
        }
        assert rel_err(coeffs.approx, want["approx"]) < 1e-12
        lh, hl, hh = coeffs.details[0]
        assert rel_err(lh, want["lh"]) < 1e-12
        assert rel_err(hl, want["hl"]) < 1e-12
        assert rel_err(hh, want["hh"]) < 1e-12

    def test_parseval_2d(self, rng):
        x = rng.normal(size=(16, 16))
        coeffs = dwt2d(x, standard_bank("haar"), TransformConfig(2))
        assert abs(np.linalg.norm(coeffs.to_vector()) - np.linalg.norm(x)) < 1e-10

    def test_bad_dimension(self):
        with pytest.raises(ShapeError):
            dwt2d(np.zeros((6, 8)), standard_bank("haar"), TransformConfig(2))


class TestIdwt2d:
    def test_zero(self):
        pair = standard_bank("haar")
        coeffs = dwt2d(np.ones((8, 8)), pair, TransformConfig(2))
        np.testing.assert_array_equal(idwt2d(coeffs.zeros_like(), pair),
                                      np.zeros((8, 8)))

    def test_round_trip_haar(self, rng):
        pair = standard_bank("haar")
        x = rng.normal(size=(8, 8))
        coeffs = dwt2d(x, pair, TransformConfig(1))
        assert rel_err(idwt2d(coeffs, pair), x) < 1e-10

    def test_round_trip_coif2(self, rng):
        pair = standard_bank("coif2")
        x = rng.normal(size=(16, 16))
        coeffs = dwt2d(x, pair, TransformConfig(2))
        assert rel_err(idwt2d(coeffs, pair), x) < 1e-9


class TestDwtGrad:
    def test_zero_upstream(self, rng):
        pair = standard_bank("db5")
        config = TransformConfig(2)
        x = rng.normal(size=16)
        upstream = dwt1d(x, pair, config).zeros_like()
        grad_x, grad_h = dwt_grad(x, pair, config, upstream)
        np.testing.assert_array_equal(grad_x, np.zeros(16))
        np.testing.assert_array_equal(grad_h, np.zeros(pair.support))

    def test_taps_match_finite_differences(self, rng):
        config = TransformConfig(2)
        pair = standard_bank("db5")
        x = rng.normal(size=16)
        upstream = dwt1d(rng.normal(size=16), pair, config)
        _, grad_h = dwt_grad(x, pair, config, upstream)

        def objective(h):
            return coeffs_inner(upstream, dwt1d(x, make_pair(h), config))

        assert rel_err(grad_h, fd_grad(objective, pair.lowpass)) < 1e-5

    def test_grad_x_is_synthesis_of_upstream(self, bank, rng):
        config = TransformConfig(3)
        x = rng.normal(size=32)
        upstream = dwt1d(rng.normal(size=32), bank, config)
        grad_x, _ = dwt_grad(x, bank, config, upstream)
        assert rel_err(grad_x, idwt1d(upstream, bank)) < 1e-10

    def test_2d_taps_match_finite_differences(self, rng):
        config = TransformConfig(2)
        pair = standard_bank("haar")
        x = rng.normal(size=(8, 8))
        upstream = dwt2d(rng.normal(size=(8, 8)), pair, config)
        grad_x, grad_h = dwt_grad(x, pair, config, upstream)

        def objective(h):
            c = dwt2d(x, make_pair(h), config)
            return float(upstream.to_vector() @ c.to_vector())

        assert rel_err(grad_h, fd_grad(objective, pair.lowpass)) < 1e-5
        assert rel_err(grad_x, idwt2d(upstream, pair)) < 1e-10


class TestCoeffVectorRoundTrip:
    def test_1d(self, rng):
        pair = standard_bank("sym5")
        coeffs = dwt1d(rng.normal(size=32), pair, TransformConfig(2))
        rebuilt = coeffs.with_vector(coeffs.to_vector())
        np.testing.assert_array_equal(rebuilt.approx, coeffs.approx)
        for a, b in zip(rebuilt.details, coeffs.details):
            np.testing.assert_array_equal(a, b)

    def test_2d(self, rng):
        pair = standard_bank("haar")
        coeffs = dwt2d(rng.normal(size=(8, 8)), pair, TransformConfig(2))
        rebuilt = coeffs.with_vector(coeffs.to_vector())
        np.testing.assert_array_equal(rebuilt.to_vector(), coeffs.to_vector())
