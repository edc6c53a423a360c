"""Serial alternate-quadrant interlocking factorization ``L0 = W0 Z0``.

The factors are not triangular: ``W0`` has a unit diagonal with wings at
the top and bottom rows (butterfly pattern), ``Z0`` has an hourglass/X
pattern.  The forward solve walks the unknowns middle-out, the back solve
outside-in, which is what lets a partitioned matrix decouple into nearly
independent blocks (see :mod:`paqif.parallel`).

For a banded matrix with semibandwidth ``beta`` every level touches at
most ``2*beta x 2`` wing entries, so factors are stored as per-level wing
blocks: O(n*beta) memory instead of a dense n x n pair.
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from .bandcore import BandedMatrix
from .errors import (ContractViolationError, FactorizationBreakdownError,
                     UnsupportedOrderError)

__all__ = ["WZFactors", "factorize_wz", "solve_w", "solve_z", "aqif_solve",
           "BREAKDOWN_TOL"]

# Relative threshold on the level 2x2 determinant; matches the
# double-precision safety margin without rejecting dominant systems.
BREAKDOWN_TOL = 1e-14


class WZFactors:
    """Factor pair of an even-order banded matrix, stored per level.

    Attributes
    ----------
    order, beta, half : int
        Matrix order ``n = 2s``, semibandwidth, and ``s``.
    z2x2 : ndarray (s+1, 2, 2)
        Corner entries ``[[z(rt,rt), z(rt,rb)], [z(rb,rt), z(rb,rb)]]`` of
        each level, ``rt = s-k``, ``rb = s+k-1`` (0-based).
    zl, zr : ndarray (s+1, 2, beta+1)
        Z rows ``rt``/``rb`` on the column windows ``[rt-beta, rt]`` and
        ``[rb, rb+beta]``.
    ww : ndarray (s+1, 2*beta, 2)
        W wing entries of columns ``rt``/``rb`` (top wing rows then
        bottom wing rows).
    """

    def __init__(self, order: int, beta: int, z2x2, zl, zr, ww):
        self.order = order
        self.beta = beta
        self.half = order // 2
        self.z2x2 = z2x2
        self.zl = zl
        self.zr = zr
        self.ww = ww

    # -- dense reconstructions (testing / reduced-system assembly) -----

    def w_dense(self) -> np.ndarray:
        n, b, s = self.order, self.beta, self.half
        w = np.eye(n)
        for k in range(1, s + 1):
            rt = s - k
            rb = s + k - 1
            for t in range(2 * b):
                i = rt - b + t if t < b else rb + 1 + (t - b)
                if 0 <= i < n:
                    w[i, rt] = self.ww[k, t, 0]
                    w[i, rb] = self.ww[k, t, 1]
        return w

    def z_dense(self) -> np.ndarray:
        n, b, s = self.order, self.beta, self.half
        z = np.zeros((n, n))
        for k in range(1, s + 1):
            rt = s - k
            rb = s + k - 1
            for t in range(b + 1):
                jl = rt - b + t
                if jl >= 0:
                    z[rt, jl] = self.zl[k, 0, t]
                    z[rb, jl] = self.zl[k, 1, t]
                jr = rb + t
                if jr < n:
                    z[rt, jr] = self.zr[k, 0, t]
                    z[rb, jr] = self.zr[k, 1, t]
        return z

    def w_corner(self) -> np.ndarray:
        """W0 restricted to the first/last ``beta`` rows and columns.

        The span of the first/last ``beta`` unit vectors is invariant
        under W0, so the inverse of this 2*beta x 2*beta block equals the
        corresponding block of the full inverse.
        """
        n, b = self.order, self.beta
        idx = np.r_[0:b, n - b:n]
        return self.w_dense()[np.ix_(idx, idx)]

    def z_corner_blocks(self):
        """(Z01, Z02, Z03, Z04): corner rows of Z on corner columns."""
        n, b = self.order, self.beta
        z = self.z_dense()
        first = np.s_[0:b]
        last = np.s_[n - b:n]
        return (z[first, first], z[first, last],
                z[last, first], z[last, last])


def factorize_wz(l0: BandedMatrix, tol: float = BREAKDOWN_TOL) -> WZFactors:
    """Factor an even-order banded matrix as ``W0 Z0``.

    Stable for nonsingular diagonally dominant matrices.  Raises
    :class:`UnsupportedOrderError` for odd orders (the method is only
    defined for ``n = 2s``; callers choose even block sizes) and
    :class:`FactorizationBreakdownError` when a level 2x2 system is
    numerically singular.
    """
    n = l0.order
    if n % 2 != 0:
        raise UnsupportedOrderError(f"order {n} is odd")
    beta = l0.beta
    s = n // 2
    band = l0.bands[np.newaxis].copy()
    anti = np.zeros_like(band)
    z2x2 = np.zeros((1, s + 1, 2, 2))
    zl = np.zeros((1, s + 1, 2, beta + 1))
    zr = np.zeros((1, s + 1, 2, beta + 1))
    ww = np.zeros((1, s + 1, 2 * beta, 2))
    status = np.zeros(1, dtype=np.int64)
    _kernels.factor_batch(band, anti, z2x2, zl, zr, ww, tol, status)
    if status[0] != 0:
        raise FactorizationBreakdownError(int(status[0]))
    return WZFactors(n, beta, z2x2[0], zl[0], zr[0], ww[0])


def solve_w(factors: WZFactors, rhs: np.ndarray) -> np.ndarray:
    """Solve ``W0 y = rhs`` by the middle-out sweep."""
    rhs = np.asarray(rhs, dtype=np.float64)
    if rhs.shape != (factors.order,):
        raise ContractViolationError("rhs length mismatch")
    y = rhs[np.newaxis].copy()
    _kernels.solve_w_batch(factors.ww[np.newaxis], y)
    return y[0]


def solve_z(factors: WZFactors, y: np.ndarray, start_level: int = 1,
            boundary: np.ndarray | None = None,
            trace: list | None = None,
            tol: float = BREAKDOWN_TOL) -> np.ndarray:
    """Solve ``Z0 x = y`` by the outside-in sweep.

    ``start_level > 1`` solves only the decoupled middle subsystem: the
    first/last ``start_level - 1`` unknowns are taken from ``boundary``
    (a full-length vector) and their couplings move to the right side.
    ``trace``, when given, receives the unknown indices in resolution
    order (strictly outside-in).
    """
    y = np.asarray(y, dtype=np.float64)
    n = factors.order
    if y.shape != (n,):
        raise ContractViolationError("rhs length mismatch")
    x = np.zeros((1, n))
    if boundary is not None:
        p = start_level - 1
        x[0, :p] = boundary[:p]
        x[0, n - p:] = boundary[n - p:]
    status = np.zeros(1, dtype=np.int64)
    trace_buf = np.full((1, n), -1, dtype=np.int64)
    _kernels.solve_z_batch(factors.z2x2[np.newaxis], factors.zl[np.newaxis],
                           factors.zr[np.newaxis], y[np.newaxis], x,
                           start_level, tol, status, trace_buf)
    if status[0] != 0:
        raise FactorizationBreakdownError(int(status[0]), "z-solve")
    if trace is not None:
        trace.extend(int(t) for t in trace_buf[0] if t >= 0)
    return x[0]


def aqif_solve(l0: BandedMatrix, rhs: np.ndarray) -> np.ndarray:
    """Direct solve of ``L0 x = rhs`` via the two alternate systems
    ``W0 y = rhs`` then ``Z0 x = y``."""
    factors = factorize_wz(l0)
    return solve_z(factors, solve_w(factors, rhs))
