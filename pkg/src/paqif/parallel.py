"""Partitioned (parallel) solver built on the interlocking factorization.

A banded system of order ``N = r*t`` splits into ``r`` diagonal blocks
with small triangular coupling blocks.  Each block factors and solves
independently; the first/last ``beta`` unknowns of every block couple
through a reduced system of order ``2*beta*r`` (semibandwidth
``3*beta - 1``) solved via its normal equations, after which the block
middles decouple again.  Steps:

  1. factor every block                      (parallel)
  2. forward-solve ``W y = f`` per block     (parallel)
  3. corner block of ``W^-1`` per block      (parallel)
  4. assemble + solve the reduced system     (serial, tiny)
  5. project boundary unknowns (LCP mode)
  6. back-substitute block middles           (parallel)
  7. project middles (LCP mode)

Workers are in-process threads; the factorization kernels release the
GIL, so blocks genuinely overlap.  A sequential executor with identical
semantics is the default.
"""

from __future__ import annotations

import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .aqif import WZFactors, factorize_wz, solve_w, solve_z
from .bandcore import (BandedMatrix, band_matvec, cholesky_spd_solve,
                       project_nonneg)
from .errors import ContractViolationError, NonConvergenceError, PartitionError

__all__ = [
    "BlockPartition", "ReducedSystem", "CostModel",
    "partition", "build_reduced_system", "solve_reduced",
    "back_substitute_middle", "paqif_solve", "paqif_solve_lcp",
    "predict_speedup",
]


@dataclass
class BlockPartition:
    """Block decomposition of a banded matrix and right side.

    ``blocks[m]`` holds the order-``t`` diagonal block; ``lminus[m]`` /
    ``lplus[m]`` are the beta x beta upper/lower-triangular couplings to
    the previous/next block (zero blocks at the chain ends).
    """
    block_count: int
    block_size: int
    beta: int
    blocks: list
    lminus: list
    lplus: list
    rhs: list

    def reassemble(self) -> BandedMatrix:
        """Rebuild the original banded matrix (bit-exact), for checking."""
        r, t, b = self.block_count, self.block_size, self.beta
        n = r * t
        out = BandedMatrix(n, b)
        dense_rows = {}
        for m in range(r):
            base = m * t
            blk = self.blocks[m]
            for o in range(-b, b + 1):
                lo = max(0, -o)
                hi = t - max(0, o)
                out.bands[b + o, base + lo:base + hi] = blk.bands[b + o, lo:hi]
            if m > 0:
                for a in range(b):
                    for c in range(b):
                        val = self.lminus[m][a, c]
                        if val != 0.0:
                            i = base + a
                            j = base - b + c
                            out.bands[b + (j - i), i] = val
            if m < r - 1:
                for a in range(b):
                    for c in range(b):
                        val = self.lplus[m][a, c]
                        if val != 0.0:
                            i = base + t - b + a
                            j = base + t + c
                            out.bands[b + (j - i), i] = val
        return out


@dataclass
class ReducedSystem:
    """Coupled corner equations: ``matrix @ u_d = rhs``."""
    matrix: np.ndarray
    rhs: np.ndarray
    beta: int
    block_count: int

    @property
    def semibandwidth(self) -> int:
        return 3 * self.beta - 1


def partition(l: BandedMatrix, f: np.ndarray, r: int) -> BlockPartition:
    """Split ``(L, f)`` into ``r`` blocks of even size ``t > 2*beta``."""
    n, b = l.order, l.beta
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (n,):
        raise ContractViolationError("rhs length mismatch")
    if r < 1 or n % r != 0:
        raise PartitionError(f"block count {r} does not divide order {n}")
    t = n // r
    if t % 2 != 0:
        raise PartitionError(f"block size {t} is odd")
    if t <= 2 * b:
        raise PartitionError(f"block size {t} <= 2*beta = {2 * b}")
    blocks, lminus, lplus, rhs = [], [], [], []
    for m in range(r):
        base = m * t
        blk = BandedMatrix(t, b)
        for o in range(-b, b + 1):
            # keep only entries whose column stays inside the block
            lo = max(0, -o)
            hi = t - max(0, o)
            blk.bands[b + o, lo:hi] = l.bands[b + o, base + lo:base + hi]
        blocks.append(blk)
        lm = np.zeros((b, b))
        if m > 0:
            for a in range(b):
                for c in range(b):
                    o = (base - b + c) - (base + a)
                    if abs(o) <= b:
                        lm[a, c] = l.bands[b + o, base + a]
        lp = np.zeros((b, b))
        if m < r - 1:
            for a in range(b):
                for c in range(b):
                    i = base + t - b + a
                    o = (base + t + c) - i
                    if abs(o) <= b:
                        lp[a, c] = l.bands[b + o, i]
        lminus.append(lm)
        lplus.append(lp)
        rhs.append(f[base:base + t].copy())
    return BlockPartition(r, t, b, blocks, lminus, lplus, rhs)


@dataclass
class _BlockData:
    factors: WZFactors
    y: np.ndarray
    w_corner_inv: np.ndarray
    cpu_seconds: float
    worker_id: int


def _block_forward(part: BlockPartition, m: int, worker_id: int) -> _BlockData:
    tic = time.perf_counter()
    factors = factorize_wz(part.blocks[m])
    y = solve_w(factors, part.rhs[m])
    w_inv = np.linalg.inv(factors.w_corner())
    return _BlockData(factors, y, w_inv, time.perf_counter() - tic, worker_id)


def _run_block_tasks(tasks, executor, r):
    """Map tasks (callables of worker_id) deterministically over workers."""
    if executor == "threads" and r > 1:
        ids = {}
        lock = threading.Lock()

        def wrapped(task):
            ident = threading.get_ident()
            with lock:
                wid = ids.setdefault(ident, len(ids))
            return task(wid)

        with ThreadPoolExecutor(max_workers=r) as pool:
            return list(pool.map(wrapped, tasks))
    return [task(0) for task in tasks]


def build_reduced_system(part: BlockPartition, block_data) -> ReducedSystem:
    """Collect the first/last ``beta`` equations of every block.

    Corner rows of Z only touch corner unknowns, and the corner block of
    ``W^-1`` applied to the coupling vectors produces the off-block terms,
    so the system closes on ``(U_F, U_L)`` per block in the interleaved
    ordering that realizes semibandwidth ``3*beta - 1``.
    """
    r, b = part.block_count, part.beta
    m_dim = 2 * b * r
    rd = np.zeros((m_dim, m_dim))
    fd = np.zeros(m_dim)
    for m in range(r):
        data = block_data[m]
        z01, z02, z03, z04 = data.factors.z_corner_blocks()
        rows_f = np.s_[2 * b * m:2 * b * m + b]
        rows_l = np.s_[2 * b * m + b:2 * b * (m + 1)]
        rd[rows_f, rows_f] = z01
        rd[rows_f, rows_l] = z02
        rd[rows_l, rows_f] = z03
        rd[rows_l, rows_l] = z04
        w1 = data.w_corner_inv[:b, :b]
        w2 = data.w_corner_inv[:b, b:]
        w3 = data.w_corner_inv[b:, :b]
        w4 = data.w_corner_inv[b:, b:]
        if m > 0:
            cols_l_prev = np.s_[2 * b * (m - 1) + b:2 * b * m]
            bbar1 = w1 @ part.lminus[m]
            bbar2 = w3 @ part.lminus[m]
            rd[rows_f, cols_l_prev] = bbar1
            rd[rows_l, cols_l_prev] = bbar2
        if m < r - 1:
            cols_f_next = np.s_[2 * b * (m + 1):2 * b * (m + 1) + b]
            cbar1 = w2 @ part.lplus[m]
            cbar2 = w4 @ part.lplus[m]
            rd[rows_f, cols_f_next] = cbar1
            rd[rows_l, cols_f_next] = cbar2
        t = part.block_size
        fd[rows_f] = data.y[:b]
        fd[rows_l] = data.y[t - b:]
    return ReducedSystem(rd, fd, b, r)


def solve_reduced(rs: ReducedSystem) -> np.ndarray:
    """Solve via the normal equations ``Rd^T Rd u = Rd^T Fd`` (Cholesky)."""
    rt_r = rs.matrix.T @ rs.matrix
    rt_f = rs.matrix.T @ rs.rhs
    return cholesky_spd_solve(rt_r, rt_f)


def back_substitute_middle(part: BlockPartition, block_data, boundary,
                           executor: str = "sequential"):
    """Solve the decoupled middle subsystem of every block.

    ``boundary[m]`` is the pair ``(u_f, u_l)`` of known first/last
    ``beta`` unknowns; their couplings move to the right side of the
    outside-in sweep, which starts at level ``beta + 1``.
    """
    r, t, b = part.block_count, part.block_size, part.beta

    def make_task(m):
        def task(worker_id):
            tic = time.perf_counter()
            u = np.zeros(t)
            u_f, u_l = boundary[m]
            u[:b] = u_f
            u[t - b:] = u_l
            mid = solve_z(block_data[m].factors, block_data[m].y,
                          start_level=b + 1, boundary=u)
            u[b:t - b] = mid[b:t - b]
            return u, time.perf_counter() - tic, worker_id
        return task

    results = _run_block_tasks([make_task(m) for m in range(r)], executor, r)
    return results


def paqif_solve(l: BandedMatrix, f: np.ndarray, r: int, *,
                executor: str = "sequential", project: bool = False,
                timings: dict | None = None) -> np.ndarray:
    """Direct solve of ``L u = f`` through the seven-step block method.

    ``project=True`` clamps boundary unknowns after the reduced solve and
    middles after back-substitution (the LCP pass).  ``timings``, when
    given, accumulates per-worker CPU seconds for the benchmark tables.
    """
    part = partition(l, f, r)

    def make_fwd(m):
        return lambda wid: _block_forward(part, m, wid)

    block_data = _run_block_tasks([make_fwd(m) for m in range(r)],
                                  executor, r)
    rs = build_reduced_system(part, block_data)
    u_d = solve_reduced(rs)
    if project:
        u_d = project_nonneg(u_d)
    b, t = part.beta, part.block_size
    boundary = [(u_d[2 * b * m:2 * b * m + b],
                 u_d[2 * b * m + b:2 * b * (m + 1)]) for m in range(r)]
    mids = back_substitute_middle(part, block_data, boundary, executor)
    u = np.empty(l.order)
    for m in range(r):
        block_u, mid_cpu, mid_wid = mids[m]
        if project:
            block_u[b:t - b] = project_nonneg(block_u[b:t - b])
        u[m * t:(m + 1) * t] = block_u
        if timings is not None:
            wid = block_data[m].worker_id
            timings[wid] = timings.get(wid, 0.0) + block_data[m].cpu_seconds
            timings[mid_wid] = timings.get(mid_wid, 0.0) + mid_cpu
    return u


def paqif_solve_lcp(problem, r: int, tol: float = 1e-10,
                    max_outer: int = 100, *,
                    executor: str = "sequential") -> np.ndarray:
    """Solve ``u >= 0, Lu >= f, u.(Lu-f) = 0`` by projected block passes.

    Each outer pass runs the seven projected steps on the current active
    right side: rows flagged active are pinned to zero (identity row,
    zero right side) and the remaining rows keep the original equations.
    The active set is then reclassified from the complementarity pair
    ``(u, Lu - f)`` until ``max(||min(u, Lu-f)||_inf) <= tol``.
    """
    l, f = problem.l, problem.f
    n, b = l.order, l.beta
    f = np.asarray(f, dtype=np.float64)
    active = f <= 0.0
    res = np.inf
    best_res = np.inf
    best_u = np.zeros(n)
    # complementarity below this is indistinguishable from round-off
    scale = float(np.abs(l.bands).sum(axis=0).max() + np.abs(f).max())
    floor = 1e3 * np.finfo(float).eps * scale
    for outer in range(max_outer):
        lmod = l.copy()
        lmod.bands[:, active] = 0.0
        # pinned rows keep the original diagonal so the reduced normal
        # equations do not mix disparate row scales
        lmod.bands[b, active] = np.where(
            np.abs(l.bands[b, active]) > 0.0, l.bands[b, active], 1.0)
        fmod = f.copy()
        fmod[active] = 0.0
        u_eval = paqif_solve(lmod, fmod, r, executor=executor)
        lam = band_matvec(l, u_eval) - f
        u = project_nonneg(u_eval)
        res = float(np.max(np.abs(np.minimum(u, band_matvec(l, u) - f))))
        if res <= tol:
            return u
        if res < best_res:
            best_res, best_u = res, u
        # next policy: a node is pinned where its own value is the smaller
        # side of the complementarity pair
        new_active = u_eval < lam
        if np.array_equal(new_active, active):
            if best_res <= max(tol, floor):
                return best_u
            break
        active = new_active
    if best_res <= max(tol, floor):
        return best_u
    raise NonConvergenceError("projected block passes did not converge",
                              residual=res, iterations=max_outer)


# ---------------------------------------------------------------------------
# Operation-count model and speedup prediction
# ---------------------------------------------------------------------------

@dataclass
class CostModel:
    """Abstract operation counts of the block method.

    ``t_add``/``t_multi``/``t_div`` weight the serial counts; ``t_op`` is
    the uniform parallel-machine step cost.
    """
    n: int
    beta: int
    r: int
    t_add: float = 1.0
    t_multi: float = 1.0
    t_div: float = 1.0
    t_op: float = 1.0

    def __post_init__(self):
        if self.n <= 0 or self.beta <= 0 or self.r <= 0:
            raise ContractViolationError("cost model needs positive sizes")
        if self.n % self.r != 0:
            raise ContractViolationError("r must divide n")

    @property
    def block_size(self) -> int:
        return self.n // self.r

    def serial_counts(self) -> dict:
        """Per-term (adds, mults, divs) of the serial algorithm."""
        r, b, t = self.r, self.beta, self.block_size
        return {
            "fact": (r * (t - 1) * (1 + 4 * b + 8 * b * b),
                     r * (t - 1) * (2 + 8 * b + 8 * b * b),
                     r * (t - 1) * 4 * b),
            "y": (r * (t - 1) * 4 * b, r * (t - 1) * 4 * b, 0),
            "inv": (r * 4 * b ** 3, r * 4 * b ** 3, 0),
            "comp": (r * 4 * b * b * (b - 1), r * 4 * b ** 3, 0),
            "norm": (36 * r * b ** 3 - 6 * r * b * b,
                     36 * r * b ** 3 - 6 * r * b * b, 0),
            "chol": (36 * r * b ** 3 - 6 * r * b * b - 10 * r * b,
                     36 * r * b ** 3 - 6 * r * b * b - 10 * r * b, 0),
            "update": (r * (t - 1) * (3 + 3 * b) - r * b * (3 + 3 * b),
                       r * (t - 1) * (6 + 3 * b) - r * b * (6 + 3 * b), 0),
        }

    def parallel_counts(self) -> dict:
        """Per-term uniform step counts on an r-processor machine."""
        b, t, r = self.beta, self.block_size, self.r
        return {
            "fact": (t - 1) * (2 + 8 * b + 8 * b * b),
            "y": (t - 1) * 4 * b,
            "inv": 4 * b ** 3,
            "comp": 4 * b ** 3,
            "norm": 36 * b ** 3 - 6 * b * b,
            "chol": 36 * b ** 3 - 6 * b * b - 10 * b,
            "update": 2 + 2 * b * b,
            "sol": r * (t - b - 1),
        }

    def serial_total(self) -> float:
        total = 0.0
        for adds, mults, divs in self.serial_counts().values():
            total += adds * self.t_add + mults * self.t_multi \
                + divs * self.t_div
        return total

    def parallel_total(self) -> float:
        return sum(self.parallel_counts().values()) * self.t_op


def predict_speedup(model: CostModel) -> float:
    """Closed-form speedup ``S_p = 1 / (4*(1/r + (beta/N)*(11 + 9r)))``."""
    r, b, n = model.r, model.beta, model.n
    return 1.0 / (4.0 * (1.0 / r + (b / n) * (11.0 + 9.0 * r)))
