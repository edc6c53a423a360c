"""Banded/dense linear-algebra primitives shared by every solver module.

Band storage is diagonal-major: one length-``n`` vector per diagonal,
``bands[beta + o, i] = A(i, i + o)`` for offsets ``o`` in ``[-beta, beta]``.
All AQIF kernels sweep along diagonals, so this layout keeps their inner
loops contiguous.  Accessors return exact zeros outside the band.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import ContractViolationError, NotPositiveDefiniteError

__all__ = [
    "BandedMatrix",
    "band_matvec",
    "cholesky_spd_solve",
    "project_nonneg",
    "is_diagonally_dominant",
]


class BandedMatrix:
    """Square matrix of order ``n`` with semibandwidth ``beta``.

    Parameters
    ----------
    order : int
        Matrix order ``n``; must satisfy ``n >= 2*beta + 1`` so the band
        description is not degenerate.
    semibandwidth : int
        Number of nonzero off-diagonals on each side of the main diagonal.
    bands : ndarray, shape (2*beta + 1, n), optional
        Diagonal-major storage.  Row ``beta + o`` holds diagonal ``o``;
        entries mapping outside the matrix must be zero.
    """

    def __init__(self, order: int, semibandwidth: int,
                 bands: np.ndarray | None = None):
        if order < 1 or semibandwidth < 1:
            raise ContractViolationError("order and semibandwidth must be >= 1")
        # order >= 2*beta+1 keeps the band description nondegenerate; small
        # fully-dense matrices (order > beta) are still representable and the
        # interlocking factorization's n=2 corner case needs them.
        if order <= semibandwidth:
            raise ContractViolationError(
                f"order {order} <= semibandwidth {semibandwidth}")
        self.order = order
        self.beta = semibandwidth
        if bands is None:
            bands = np.zeros((2 * semibandwidth + 1, order))
        else:
            bands = np.ascontiguousarray(bands, dtype=np.float64)
            if bands.shape != (2 * semibandwidth + 1, order):
                raise ContractViolationError(
                    f"bands shape {bands.shape} != "
                    f"{(2 * semibandwidth + 1, order)}")
        self.bands = bands
        self._zero_out_of_range()

    def _zero_out_of_range(self):
        n, b = self.order, self.beta
        for o in range(-b, b + 1):
            row = self.bands[b + o]
            if o > 0:
                row[n - o:] = 0.0
            elif o < 0:
                row[:-o] = 0.0

    # -- constructors -------------------------------------------------

    @classmethod
    def from_dense(cls, dense: np.ndarray, semibandwidth: int) -> "BandedMatrix":
        dense = np.asarray(dense, dtype=np.float64)
        n = dense.shape[0]
        if dense.shape != (n, n):
            raise ContractViolationError("dense matrix must be square")
        out = cls(n, semibandwidth)
        b = semibandwidth
        for o in range(-b, b + 1):
            d = np.diagonal(dense, offset=o)
            if o >= 0:
                out.bands[b + o, :n - o] = d
            else:
                out.bands[b + o, -o:] = d
        return out

    @classmethod
    def identity(cls, order: int, semibandwidth: int = 1) -> "BandedMatrix":
        out = cls(order, semibandwidth)
        out.bands[semibandwidth] = 1.0
        return out

    @classmethod
    def from_diagonals(cls, order: int, offsets_and_values: dict) -> "BandedMatrix":
        """Build from ``{offset: scalar or vector}`` (Toeplitz-style helper)."""
        beta = max(abs(o) for o in offsets_and_values)
        out = cls(order, beta)
        for o, v in offsets_and_values.items():
            row = out.bands[beta + o]
            lo = max(0, -o)
            hi = order - max(0, o)
            if np.ndim(v):
                row[lo:hi] = np.asarray(v, dtype=np.float64)[lo:hi]
            else:
                row[lo:hi] = v
        out._zero_out_of_range()
        return out

    # -- accessors ----------------------------------------------------

    def entry(self, i: int, j: int) -> float:
        """A(i, j); exact zero outside the band."""
        if not (0 <= i < self.order and 0 <= j < self.order):
            raise ContractViolationError("index out of range")
        o = j - i
        if abs(o) > self.beta:
            return 0.0
        return float(self.bands[self.beta + o, i])

    def to_dense(self) -> np.ndarray:
        n, b = self.order, self.beta
        dense = np.zeros((n, n))
        for o in range(-b, b + 1):
            idx = np.arange(max(0, -o), n - max(0, o))
            dense[idx, idx + o] = self.bands[b + o, idx]
        return dense

    def copy(self) -> "BandedMatrix":
        return BandedMatrix(self.order, self.beta, self.bands.copy())

    def row(self, i: int) -> np.ndarray:
        """Dense row i (length ``order``)."""
        n, b = self.order, self.beta
        out = np.zeros(n)
        lo = max(0, i - b)
        hi = min(n, i + b + 1)
        out[lo:hi] = self.bands[(lo - i) + b:(hi - i) + b, i]
        return out

    def scaled(self, factor: float) -> "BandedMatrix":
        return BandedMatrix(self.order, self.beta, self.bands * factor)

    def __repr__(self):
        return f"BandedMatrix(order={self.order}, beta={self.beta})"


def band_matvec(a: BandedMatrix, x: np.ndarray) -> np.ndarray:
    """y_i = sum_{|i-j| <= beta} A(i, j) x_j."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (a.order,):
        raise ContractViolationError(
            f"vector length {x.shape} incompatible with order {a.order}")
    n, b = a.order, a.beta
    y = np.zeros(n)
    for o in range(-b, b + 1):
        lo = max(0, -o)
        hi = n - max(0, o)
        y[lo:hi] += a.bands[b + o, lo:hi] * x[lo + o:hi + o]
    return y


def cholesky_spd_solve(a: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``A x = rhs`` for symmetric positive definite ``A``.

    Raises
    ------
    NotPositiveDefiniteError
        On a non-positive pivot; for the block solver this signals a bad
        reduced system.
    """
    a = np.asarray(a, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractViolationError("matrix must be square")
    if rhs.shape[0] != a.shape[0]:
        raise ContractViolationError("rhs length mismatch")
    try:
        c, low = scipy.linalg.cho_factor(a, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(str(exc)) from exc
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - alias
        raise NotPositiveDefiniteError(str(exc)) from exc
    return scipy.linalg.cho_solve((c, low), rhs, check_finite=False)


def project_nonneg(x: np.ndarray) -> np.ndarray:
    """Componentwise projection onto the nonnegative cone (idempotent)."""
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


def is_diagonally_dominant(a: BandedMatrix) -> bool:
    """Row diagonal dominance, strict for at least one row."""
    n, b = a.order, a.beta
    diag = np.abs(a.bands[b])
    offsum = np.zeros(n)
    for o in range(-b, b + 1):
        if o == 0:
            continue
        offsum += np.abs(a.bands[b + o])
    return bool(np.all(diag >= offsum) and np.any(diag > offsum))
