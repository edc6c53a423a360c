import numpy as np
import pytest

from paqif.aqif import WZFactors, aqif_solve, factorize_wz, solve_w, solve_z
from paqif.bandcore import BandedMatrix, band_matvec
from paqif.errors import FactorizationBreakdownError, UnsupportedOrderError

from conftest import random_banded


def w_pattern_ok(w, atol=0.0):
    """Check the butterfly zero pattern of W (1-based ranges from the
    factor definition: left-half columns vanish strictly below the
    diagonal down to the mirrored row, right-half columns mirrored)."""
    n = w.shape[0]
    half = n // 2
    for j1 in range(1, half + 1):            # 1-based column
        for i1 in range(j1 + 1, n - j1 + 2):
            if i1 == j1:
                continue
            if not abs(w[i1 - 1, j1 - 1]) <= atol:
                return False
    for j1 in range(n + 1 - half, n + 1):
        for i1 in range(n - j1 + 1, j1):
            if i1 == j1:
                continue
            if not abs(w[i1 - 1, j1 - 1]) <= atol:
                return False
    return np.allclose(np.diag(w), 1.0)


def z_pattern_ok(z, atol=0.0):
    """Hourglass zero pattern of Z."""
    n = z.shape[0]
    half = n // 2
    for i1 in range(1, (n - 1) // 2 + 1):
        for j1 in range(i1 + 1, n - i1 + 1):
            if not abs(z[i1 - 1, j1 - 1]) <= atol:
                return False
    for i1 in range(n + 1 - half, n + 1):
        for j1 in range(n - i1 + 2, i1):
            if not abs(z[i1 - 1, j1 - 1]) <= atol:
                return False
    return True


def banded_wings_ok(factors):
    """Banded input only populates band-limited wing entries."""
    n, b = factors.order, factors.beta
    w = factors.w_dense()
    z = factors.z_dense()
    ok = True
    for i in range(n):
        for j in range(n):
            in_band = abs(i - j) <= b
            in_anti = abs(i + j - (n - 1)) <= b
            if not (in_band or in_anti):
                ok &= w[i, j] == 0.0
                ok &= z[i, j] == 0.0
    return ok


class TestFactorize:
    def test_identity(self):
        f = factorize_wz(BandedMatrix.identity(4))
        assert np.array_equal(f.w_dense(), np.eye(4))
        assert np.array_equal(f.z_dense(), np.eye(4))

    def test_order_two_degenerates_to_corner_level(self):
        l = BandedMatrix.from_dense(np.array([[3.0, 1.0], [2.0, 4.0]]), 1)
        f = factorize_wz(l)
        assert np.array_equal(f.w_dense(), np.eye(2))
        assert np.array_equal(f.z_dense(), l.to_dense())

    def test_poisson_reconstruction(self):
        l = BandedMatrix.from_diagonals(8, {-1: -1.0, 0: 4.0, 1: -1.0})
        f = factorize_wz(l)
        err = np.max(np.abs(f.w_dense() @ f.z_dense() - l.to_dense()))
        assert err <= 1e-12

    def test_odd_order_rejected(self):
        l = BandedMatrix.from_diagonals(7, {-1: -1.0, 0: 4.0, 1: -1.0})
        with pytest.raises(UnsupportedOrderError):
            factorize_wz(l)

    def test_breakdown_detected(self):
        # zero matrix: every level 2x2 is singular
        l = BandedMatrix(8, 1)
        with pytest.raises(FactorizationBreakdownError):
            factorize_wz(l)

    def test_pattern_and_reconstruction_family(self, rng):
        for n in (8, 16, 32, 64):
            for beta in (1, 2, 3):
                l = random_banded(n, beta, rng)
                f = factorize_wz(l)
                w, z = f.w_dense(), f.z_dense()
                assert w_pattern_ok(w)
                assert z_pattern_ok(z)
                assert banded_wings_ok(f)
                dense = l.to_dense()
                rel = np.max(np.abs(w @ z - dense)) / np.max(np.abs(dense))
                assert rel <= 1e-10


class TestSolveW:
    def test_identity_w(self):
        f = factorize_wz(BandedMatrix.identity(6))
        rhs = np.arange(1.0, 7.0)
        np.testing.assert_array_equal(solve_w(f, rhs), rhs)

    def test_single_wing_hand_case(self):
        # W of order 4 with one wing entry w(1,2)=a (1-based):
        # y2=F2, y3=F3, y1=F1-a*y2, y4=F4
        a = 0.7
        n, beta, s = 4, 1, 2
        ww = np.zeros((s + 1, 2 * beta, 2))
        ww[1, 0, 0] = a  # level 1, top wing row 0, column rt=1 (0-based)
        factors = WZFactors(n, beta, np.zeros((s + 1, 2, 2)),
                            np.zeros((s + 1, 2, beta + 1)),
                            np.zeros((s + 1, 2, beta + 1)), ww)
        rhs = np.array([1.0, 2.0, 3.0, 4.0])
        np.testing.assert_allclose(solve_w(factors, rhs),
                                   [1.0 - a * 2.0, 2.0, 3.0, 4.0])

    def test_residual_random_dominant(self, rng):
        l = random_banded(16, 2, rng)
        f = factorize_wz(l)
        rhs = rng.standard_normal(16)
        y = solve_w(f, rhs)
        res = np.max(np.abs(f.w_dense() @ y - rhs))
        assert res <= 1e-10 * np.max(np.abs(rhs))


class TestSolveZ:
    def test_identity_z(self):
        f = factorize_wz(BandedMatrix.identity(6))
        y = np.arange(1.0, 7.0)
        np.testing.assert_array_equal(solve_z(f, y), y)

    def test_diagonal_z(self):
        d = np.array([2.0, 4.0, 5.0, 8.0])
        l = BandedMatrix.from_diagonals(4, {0: d, 1: 0.0, -1: 0.0})
        f = factorize_wz(l)
        y = np.array([2.0, 8.0, 15.0, 16.0])
        np.testing.assert_allclose(solve_z(f, y), y / d)

    def test_full_pipeline_residual(self, rng):
        l = BandedMatrix.from_diagonals(32, {-1: -1.0, 0: 4.0, 1: -1.0})
        rhs = rng.standard_normal(32)
        u = aqif_solve(l, rhs)
        res = np.max(np.abs(band_matvec(l, u) - rhs))
        assert res <= 1e-10 * np.max(np.abs(rhs))

    def test_outside_in_order(self, rng):
        l = random_banded(16, 2, rng)
        f = factorize_wz(l)
        trace = []
        solve_z(f, rng.standard_normal(16), trace=trace)
        n = 16
        expected = []
        for level in range(n // 2):
            expected += [level, n - 1 - level]
        assert trace == expected

    def test_middle_solve_matches_full(self, rng):
        l = random_banded(24, 2, rng)
        f = factorize_wz(l)
        y = rng.standard_normal(24)
        x_full = solve_z(f, y)
        x_mid = solve_z(f, y, start_level=3, boundary=x_full)
        np.testing.assert_allclose(x_mid[2:-2], x_full[2:-2], atol=1e-12)


class TestAqifSolve:
    def test_identity_system(self, rng):
        rhs = rng.standard_normal(8)
        np.testing.assert_array_equal(
            aqif_solve(BandedMatrix.identity(8), rhs), rhs)

    def test_poisson_manufactured(self):
        n = 64
        h = 1.0 / (n + 1)
        l = BandedMatrix.from_diagonals(
            n, {-1: -1.0 / h**2, 0: 2.0 / h**2, 1: -1.0 / h**2})
        x = np.linspace(h, 1 - h, n)
        exact = np.sin(np.pi * x)
        rhs = band_matvec(l, exact)
        u = aqif_solve(l, rhs)
        rel = np.max(np.abs(u - exact)) / np.max(np.abs(exact))
        assert rel <= 1e-10

    def test_pentadiagonal_vs_dense(self, rng):
        l = random_banded(128, 2, rng)
        rhs = rng.standard_normal(128)
        u = aqif_solve(l, rhs)
        ud = np.linalg.solve(l.to_dense(), rhs)
        assert np.max(np.abs(u - ud)) / np.max(np.abs(ud)) <= 1e-9

    def test_dense_oracle_family(self, rng):
        for n in (8, 16, 32, 64):
            for beta in (1, 2, 3):
                l = random_banded(n, beta, rng)
                rhs = rng.standard_normal(n)
                u = aqif_solve(l, rhs)
                ud = np.linalg.solve(l.to_dense(), rhs)
                assert np.max(np.abs(u - ud)) / np.max(np.abs(ud)) <= 1e-9
