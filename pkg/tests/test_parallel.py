import numpy as np
import pytest
import sympy

from paqif.aqif import aqif_solve, factorize_wz, solve_w
from paqif.bandcore import BandedMatrix, band_matvec
from paqif.errors import NotPositiveDefiniteError, PartitionError
from paqif.lcp import LcpProblem, psor_oracle
from paqif.parallel import (CostModel, build_reduced_system, paqif_solve,
                            paqif_solve_lcp, partition, predict_speedup,
                            solve_reduced, _block_forward)

from conftest import random_banded


def obstacle_1d(n, amplitude=50.0):
    h = 1.0 / (n + 1)
    l = BandedMatrix.from_diagonals(
        n, {-1: -1.0 / h**2, 0: 2.0 / h**2, 1: -1.0 / h**2})
    x = np.linspace(h, 1 - h, n)
    return LcpProblem(l, amplitude * np.sin(2 * np.pi * x))


def obstacle_2d(nx, ny, amplitude=400.0):
    n = nx * ny
    h = 1.0 / (nx + 1)
    d = {0: 4.0 / h**2, -1: -1.0 / h**2, 1: -1.0 / h**2,
         -nx: -1.0 / h**2, nx: -1.0 / h**2}
    l = BandedMatrix.from_diagonals(n, d)
    for i in range(n):
        if i % nx == 0:
            l.bands[l.beta - 1, i] = 0.0
        if i % nx == nx - 1:
            l.bands[l.beta + 1, i] = 0.0
    xs = np.arange(1, nx + 1) * h
    ys = np.arange(1, ny + 1) * (1.0 / (ny + 1))
    grid_x, grid_y = np.meshgrid(xs, ys)
    f = amplitude * np.sin(2 * np.pi * grid_x) * np.cos(np.pi * grid_y)
    return LcpProblem(l, f.ravel())


class TestPartition:
    def test_single_block(self, rng):
        l = random_banded(16, 2, rng)
        f = rng.standard_normal(16)
        p = partition(l, f, 1)
        assert p.block_count == 1
        assert np.array_equal(p.blocks[0].bands, l.bands)
        assert not np.any(p.lminus[0]) and not np.any(p.lplus[0])

    def test_tridiag_coupling_scalars(self):
        l = BandedMatrix.from_diagonals(8, {-1: -1.0, 0: 2.0, 1: -1.0})
        p = partition(l, np.zeros(8), 2)
        assert p.lplus[0][0, 0] == -1.0
        assert p.lminus[1][0, 0] == -1.0

    def test_reassembly_bit_exact(self, rng):
        l = random_banded(32, 2, rng)
        p = partition(l, rng.standard_normal(32), 4)
        assert np.array_equal(p.reassemble().bands, l.bands)

    def test_partition_errors(self, rng):
        l = random_banded(16, 2, rng)
        f = np.zeros(16)
        with pytest.raises(PartitionError):
            partition(l, f, 3)        # does not divide
        with pytest.raises(PartitionError):
            partition(l, f, 4)        # block size 4 <= 2*beta


class TestReducedSystem:
    def test_single_block_is_corner_system(self, rng):
        l = random_banded(16, 2, rng)
        f = rng.standard_normal(16)
        p = partition(l, f, 1)
        data = [_block_forward(p, 0, 0)]
        rs = build_reduced_system(p, data)
        z01, z02, z03, z04 = data[0].factors.z_corner_blocks()
        np.testing.assert_array_equal(rs.matrix[:2, :2], z01)
        np.testing.assert_array_equal(rs.matrix[:2, 2:], z02)
        np.testing.assert_array_equal(rs.matrix[2:, :2], z03)
        np.testing.assert_array_equal(rs.matrix[2:, 2:], z04)
        assert rs.semibandwidth == 3 * 2 - 1

    def test_reduced_solution_matches_dense(self, rng):
        l = BandedMatrix.from_diagonals(8, {-1: -1.0, 0: 2.0, 1: -1.0})
        f = rng.standard_normal(8)
        p = partition(l, f, 2)
        data = [_block_forward(p, m, 0) for m in range(2)]
        rs = build_reduced_system(p, data)
        u_d = solve_reduced(rs)
        dense = np.linalg.solve(l.to_dense(), f)
        # interleaved ordering: (U_F^1, U_L^1, U_F^2, U_L^2)
        expected = np.r_[dense[0], dense[3], dense[4], dense[7]]
        np.testing.assert_allclose(u_d, expected, atol=1e-10)

    def test_reduced_random_dominant(self, rng):
        l = random_banded(64, 2, rng)
        f = rng.standard_normal(64)
        p = partition(l, f, 4)
        data = [_block_forward(p, m, 0) for m in range(4)]
        rs = build_reduced_system(p, data)
        u_d = solve_reduced(rs)
        dense = np.linalg.solve(l.to_dense(), f)
        t, b = 16, 2
        expected = np.concatenate([
            np.r_[dense[m * t:m * t + b], dense[(m + 1) * t - b:(m + 1) * t]]
            for m in range(4)])
        assert np.max(np.abs(u_d - expected)) <= 1e-9 * np.max(np.abs(dense))


class TestSolveReduced:
    def test_identity(self, rng):
        from paqif.parallel import ReducedSystem
        f = rng.standard_normal(8)
        rs = ReducedSystem(np.eye(8), f, 2, 2)
        np.testing.assert_allclose(solve_reduced(rs), f, atol=1e-12)

    def test_orthogonal_rotations(self, rng):
        from paqif.parallel import ReducedSystem
        theta = 0.3
        rot = np.array([[np.cos(theta), -np.sin(theta)],
                        [np.sin(theta), np.cos(theta)]])
        q = np.kron(np.eye(2), rot)
        f = rng.standard_normal(4)
        rs = ReducedSystem(q, f, 1, 2)
        np.testing.assert_allclose(solve_reduced(rs), q.T @ f, atol=1e-12)

    def test_singular_raises(self):
        from paqif.parallel import ReducedSystem
        rs = ReducedSystem(np.zeros((4, 4)), np.ones(4), 1, 2)
        with pytest.raises(NotPositiveDefiniteError):
            solve_reduced(rs)


class TestPaqifSolve:
    def test_identity_matrix_any_r(self, rng):
        l = BandedMatrix.identity(32)
        f = rng.standard_normal(32)
        for r in (1, 2, 4, 8):
            np.testing.assert_allclose(paqif_solve(l, f, r), f, atol=1e-14)

    def test_poisson_r_independence(self, rng):
        n = 64
        h = 1.0 / (n + 1)
        l = BandedMatrix.from_diagonals(
            n, {-1: -1.0 / h**2, 0: 2.0 / h**2, 1: -1.0 / h**2})
        f = rng.standard_normal(n)
        sols = [paqif_solve(l, f, r) for r in (1, 2, 4)]
        scale = np.max(np.abs(sols[0]))
        for s in sols[1:]:
            assert np.max(np.abs(s - sols[0])) <= 1e-12 * scale

    def test_large_vs_dense(self, rng):
        l = random_banded(512, 2, rng)
        f = rng.standard_normal(512)
        u = paqif_solve(l, f, 8)
        ud = np.linalg.solve(l.to_dense(), f)
        assert np.max(np.abs(u - ud)) / np.max(np.abs(ud)) <= 1e-9

    def test_equivalence_with_serial_aqif(self, rng):
        l = random_banded(64, 3, rng)
        f = rng.standard_normal(64)
        u_blk = paqif_solve(l, f, 1)
        u_ser = aqif_solve(l, f)
        assert np.max(np.abs(u_blk - u_ser)) <= 1e-13 * np.max(np.abs(u_ser))

    def test_threads_deterministic(self, rng):
        l = random_banded(256, 2, rng)
        f = rng.standard_normal(256)
        a = paqif_solve(l, f, 4, executor="sequential")
        b = paqif_solve(l, f, 4, executor="threads")
        assert np.array_equal(a, b)

    def test_middle_back_substitution_diagonal(self, rng):
        # diagonal matrix: middles are an elementwise division
        d = rng.uniform(1.0, 3.0, 16)
        l = BandedMatrix.from_diagonals(16, {0: d, 1: 0.0, -1: 0.0})
        f = rng.standard_normal(16)
        np.testing.assert_allclose(paqif_solve(l, f, 2), f / d, atol=1e-13)

    def test_big_block_case_vs_dense(self, rng):
        l = random_banded(128, 2, rng)
        f = rng.standard_normal(128)
        u = paqif_solve(l, f, 8)
        ud = np.linalg.solve(l.to_dense(), f)
        assert np.max(np.abs(u - ud)) <= 1e-9 * np.max(np.abs(ud))


class TestPaqifLcp:
    def test_trivially_complementary(self):
        n = 32
        l = BandedMatrix.from_diagonals(n, {-1: -1.0, 0: 4.0, 1: -1.0})
        f = -np.abs(np.linspace(0.5, 2.0, n))
        u = paqif_solve_lcp(LcpProblem(l, f), 1)
        np.testing.assert_array_equal(u, np.zeros(n))

    def test_obstacle_vs_psor(self):
        prob = obstacle_1d(64)
        u_ref = psor_oracle(prob, omega=1.7, tol=1e-13)
        u = paqif_solve_lcp(prob, 1, tol=1e-10)
        assert np.max(np.abs(u - u_ref)) <= 1e-8

    def test_obstacle_cross_r(self):
        prob = obstacle_1d(64)
        u1 = paqif_solve_lcp(prob, 1, tol=1e-10)
        for r in (2, 4):
            ur = paqif_solve_lcp(prob, r, tol=1e-10)
            assert np.max(np.abs(ur - u1)) <= 1e-8

    def test_lcp_conditions(self):
        prob = obstacle_2d(16, 32)
        u = paqif_solve_lcp(prob, 4, tol=1e-10)
        lam = band_matvec(prob.l, u) - prob.f
        n = prob.l.order
        assert np.all(u >= 0.0)
        assert np.min(lam) >= -1e-10 * max(1.0, np.max(np.abs(prob.f)))
        assert abs(u @ lam) <= 1e-10 * n * max(1.0, np.max(np.abs(prob.f)))


class TestCostModel:
    def test_speedup_literal_formula(self):
        m = CostModel(512, 2, 4)
        expected = 1.0 / (4.0 * (0.25 + (2.0 / 512.0) * 47.0))
        assert predict_speedup(m) == pytest.approx(expected, rel=1e-15)

    def test_speedup_r1_low_bandwidth_limit(self):
        m = CostModel(1 << 20, 1, 1)
        assert predict_speedup(m) == pytest.approx(0.25, rel=1e-3)

    def test_monotone_in_n(self):
        vals = [predict_speedup(CostModel(n, 2, 4))
                for n in (128, 256, 512, 1024, 2048)]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_serial_counts_match_printed_sums_symbolically(self):
        # recompute the serial operation sums from their printed forms
        r, t, b = sympy.symbols("r t b", positive=True)
        printed = {
            "fact": (r * (t - 1) * (1 + 4 * b + 8 * b**2),
                     r * (t - 1) * (2 + 8 * b + 8 * b**2),
                     r * (t - 1) * 4 * b),
            "y": (r * (t - 1) * 4 * b, r * (t - 1) * 4 * b, 0),
            "inv": (4 * r * b**3, 4 * r * b**3, 0),
            "comp": (4 * r * b**2 * (b - 1), 4 * r * b**3, 0),
            "norm": (36 * r * b**3 - 6 * r * b**2,
                     36 * r * b**3 - 6 * r * b**2, 0),
            "chol": (36 * r * b**3 - 6 * r * b**2 - 10 * r * b,
                     36 * r * b**3 - 6 * r * b**2 - 10 * r * b, 0),
            "update": (r * (t - 1) * (3 + 3 * b) - r * b * (3 + 3 * b),
                       r * (t - 1) * (6 + 3 * b) - r * b * (6 + 3 * b), 0),
        }
        for n_val, b_val, r_val in ((64, 2, 1), (128, 3, 1), (256, 4, 1)):
            model = CostModel(n_val, b_val, r_val)
            counts = model.serial_counts()
            subs = {r: r_val, t: n_val // r_val, b: b_val}
            for term, (adds, mults, divs) in printed.items():
                got = counts[term]
                assert got[0] == int(sympy.simplify(adds.subs(subs)))
                assert got[1] == int(sympy.simplify(mults.subs(subs)))
                want_div = divs.subs(subs) if divs != 0 else 0
                assert got[2] == int(want_div)

    def test_parallel_counts_structure(self):
        m = CostModel(64, 2, 4)
        counts = m.parallel_counts()
        assert set(counts) == {"fact", "y", "inv", "comp", "norm", "chol",
                               "update", "sol"}
        assert all(v >= 0 for v in counts.values())
