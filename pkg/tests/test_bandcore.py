import numpy as np
import pytest

from paqif.bandcore import (BandedMatrix, band_matvec, cholesky_spd_solve,
                            is_diagonally_dominant, project_nonneg)
from paqif.errors import ContractViolationError, NotPositiveDefiniteError

from conftest import random_banded


class TestBandedMatrix:
    def test_entry_zero_outside_band(self, rng):
        a = random_banded(12, 2, rng)
        for i in range(12):
            for j in range(12):
                if abs(i - j) > 2:
                    assert a.entry(i, j) == 0.0

    def test_dense_round_trip(self, rng):
        a = random_banded(16, 3, rng)
        b = BandedMatrix.from_dense(a.to_dense(), 3)
        assert np.array_equal(a.bands, b.bands)

    def test_degenerate_order_rejected(self):
        with pytest.raises(ContractViolationError):
            BandedMatrix(2, 2)


class TestBandMatvec:
    def test_identity(self):
        a = BandedMatrix.identity(4)
        x = np.array([1.0, 2.0, 3.0, 4.0])
        assert np.array_equal(band_matvec(a, x), x)

    def test_tridiag_constant_vector(self):
        a = BandedMatrix.from_diagonals(3, {-1: -1.0, 0: 2.0, 1: -1.0})
        np.testing.assert_allclose(band_matvec(a, np.ones(3)),
                                   [1.0, 0.0, 1.0])

    def test_matches_dense_product(self, rng):
        a = random_banded(16, 2, rng)
        x = rng.standard_normal(16)
        np.testing.assert_allclose(band_matvec(a, x), a.to_dense() @ x,
                                   rtol=0, atol=1e-13)

    def test_dense_agreement_family(self, rng):
        # property: agreement on all random matrices with n <= 64
        for n in (8, 17, 33, 64):
            for beta in (1, 2, 3):
                a = random_banded(n, beta, rng, dominant=False)
                x = rng.standard_normal(n)
                np.testing.assert_allclose(band_matvec(a, x),
                                           a.to_dense() @ x,
                                           rtol=0, atol=1e-12)

    def test_dimension_mismatch(self, rng):
        a = random_banded(8, 1, rng)
        with pytest.raises(ContractViolationError):
            band_matvec(a, np.zeros(7))


class TestCholeskySolve:
    def test_identity(self):
        x = cholesky_spd_solve(np.eye(3), np.array([1.0, 2.0, 3.0]))
        np.testing.assert_allclose(x, [1.0, 2.0, 3.0])

    def test_2x2_closed_form(self):
        a = np.array([[4.0, 2.0], [2.0, 3.0]])
        b = np.array([2.0, 1.0])
        # det = 8; closed-form inverse gives (0.5, 0)
        np.testing.assert_allclose(cholesky_spd_solve(a, b), [0.5, 0.0],
                                   atol=1e-14)

    def test_matches_dense_elimination(self, rng):
        r = rng.standard_normal((8, 8)) + 4.0 * np.eye(8)
        a = r.T @ r
        b = rng.standard_normal(8)
        np.testing.assert_allclose(cholesky_spd_solve(a, b),
                                   np.linalg.solve(a, b), atol=1e-10)

    def test_residual_contract(self, rng):
        r = rng.standard_normal((12, 12)) + 5.0 * np.eye(12)
        a = r.T @ r
        b = rng.standard_normal(12)
        x = cholesky_spd_solve(a, b)
        assert np.max(np.abs(a @ x - b)) <= 1e-10 * max(np.max(np.abs(b)),
                                                        1e-14)

    def test_least_squares_property(self, rng):
        # normal equations match a QR-based least-squares oracle
        a = rng.standard_normal((16, 16)) + 3.0 * np.eye(16)
        b = rng.standard_normal(16)
        x = cholesky_spd_solve(a.T @ a, a.T @ b)
        x_ls, *_ = np.linalg.lstsq(a, b, rcond=None)
        np.testing.assert_allclose(x, x_ls, atol=1e-8)

    def test_not_positive_definite(self):
        with pytest.raises(NotPositiveDefiniteError):
            cholesky_spd_solve(np.array([[1.0, 2.0], [2.0, 1.0]]),
                               np.array([1.0, 1.0]))


class TestProjectNonneg:
    def test_basic(self):
        np.testing.assert_array_equal(
            project_nonneg(np.array([1.0, -2.0, 0.0])), [1.0, 0.0, 0.0])

    def test_fixed_point_nonnegative(self, rng):
        x = np.abs(rng.standard_normal(10))
        np.testing.assert_array_equal(project_nonneg(x), x)

    def test_all_negative(self):
        np.testing.assert_array_equal(project_nonneg(-np.ones(5)),
                                      np.zeros(5))

    def test_idempotent(self, rng):
        x = rng.standard_normal(50)
        once = project_nonneg(x)
        np.testing.assert_array_equal(project_nonneg(once), once)


class TestDiagonalDominance:
    def test_poisson_tridiag(self):
        a = BandedMatrix.from_diagonals(8, {-1: -1.0, 0: 2.0, 1: -1.0})
        assert is_diagonally_dominant(a)  # strict at boundary rows

    def test_weak_interior_fails(self):
        a = BandedMatrix.from_diagonals(8, {-1: -1.0, 0: 1.5, 1: -1.0})
        assert not is_diagonally_dominant(a)

    def test_random_dominant_construction(self, rng):
        for _ in range(5):
            assert is_diagonally_dominant(random_banded(20, 3, rng))
