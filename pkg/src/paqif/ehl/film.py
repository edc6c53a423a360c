"""Film thickness evaluation: offset + geometry + elastic deformation.

The deformation is a dense convolution of the pressure with the kernel
table.  Full evaluations run through cached FFTs; during a line sweep
the freshly solved line changes are kept as pending updates whose exact
contribution to the few rows a later line needs is added on demand, so
the film every line sees is current without O(n^2) work per line.
"""

from __future__ import annotations

import numpy as np
import scipy.fft

from ..errors import ContractViolationError
from .kernels import DeformationKernel, kernel_line, kernel_point

__all__ = ["FilmModel"]

_FOLD_LIMIT = 8  # pending line updates folded into the base via FFT


class FilmModel:
    """Deformation bookkeeping for one contact grid.

    Point contact: ``H = h0 + (x^2+y^2)/2 + sum G*u`` (kernel carries its
    ``2/pi^2``).  Line contact: ``H = h0 + x^2/2 - (1/pi) sum G*u``.
    Fields are indexed ``u[j, i]`` with x along the second axis.
    """

    def __init__(self, contact: str, intervals: int, h: float,
                 lo: float = -2.5, kernel: DeformationKernel | None = None):
        if contact not in ("point", "line"):
            raise ContractViolationError("contact must be 'point' or 'line'")
        self.contact = contact
        self.n = intervals
        self.h = h
        self.x = lo + h * np.arange(intervals + 1)
        if kernel is None:
            kernel = (kernel_point(intervals, intervals, h)
                      if contact == "point" else kernel_line(intervals, h))
        self.kernel = kernel
        if contact == "point":
            gx, gy = np.meshgrid(self.x, self.x)
            self.geometry = 0.5 * (gx**2 + gy**2)
            t = kernel.table
            full = np.zeros((2 * intervals + 1, 2 * intervals + 1))
            full[intervals:, intervals:] = t
            full[intervals:, :intervals + 1] = t[:, ::-1]
            full[:intervals + 1, intervals:] = t[::-1, :]
            full[:intervals + 1, :intervals + 1] = t[::-1, ::-1]
            self._kernel_full = full
            shape = [scipy.fft.next_fast_len(3 * intervals + 1)] * 2
            self._fft_shape = shape
            self._kernel_fft = scipy.fft.rfftn(full, shape)
            self.sign = 1.0
        else:
            self.geometry = 0.5 * self.x**2
            t = kernel.table
            self._kernel_ext = np.concatenate([t[::-1], t[1:]])
            self.sign = -1.0 / np.pi
        self._base = None
        self._pending = []

    # -- deformation ---------------------------------------------------

    def deformation_full(self, u: np.ndarray) -> np.ndarray:
        """Exact deformation of the whole field; resets pending state."""
        if self.contact == "line":
            conv = np.convolve(u, self._kernel_ext)[self.n:2 * self.n + 1]
            self._base = self.sign * conv
        else:
            uf = scipy.fft.rfftn(u, self._fft_shape)
            conv = scipy.fft.irfftn(uf * self._kernel_fft, self._fft_shape)
            self._base = conv[self.n:2 * self.n + 1,
                              self.n:2 * self.n + 1].copy()
        self._pending = []
        return self._base

    def film_full(self, u: np.ndarray, h0: float) -> np.ndarray:
        return h0 + self.geometry + self.deformation_full(u)

    def note_line_update(self, axis: str, index: int,
                         delta: np.ndarray, u: np.ndarray) -> None:
        """Record an applied line change; folds into the base once the
        pending list grows past the FFT break-even point."""
        if not np.any(delta):
            return
        self._pending.append((axis, index, delta.copy()))
        if len(self._pending) > _FOLD_LIMIT:
            self.deformation_full(u)

    def _row_correction(self, r: int) -> np.ndarray:
        n = self.n
        corr = np.zeros(n + 1)
        table = self.kernel.table
        for axis, ell, delta in self._pending:
            if axis == "row":
                kern_col = table[:, abs(r - ell)]
                ext = np.concatenate([kern_col[::-1], kern_col[1:]])
                corr += np.convolve(delta, ext)[n:2 * n + 1]
            else:
                d1 = np.abs(np.arange(n + 1) - ell)
                d2 = np.abs(r - np.arange(n + 1))
                corr += table[np.ix_(d1, d2)] @ delta
        return corr

    def _col_correction(self, c: int) -> np.ndarray:
        n = self.n
        corr = np.zeros(n + 1)
        table = self.kernel.table
        for axis, ell, delta in self._pending:
            if axis == "col":
                kern_col = table[:, abs(c - ell)]
                ext = np.concatenate([kern_col[::-1], kern_col[1:]])
                corr += np.convolve(delta, ext)[n:2 * n + 1]
            else:
                # row update at ell, delta indexed by k along x:
                # corr[m] = sum_k G[|c-k|, |m-ell|] delta[k]
                d_k = np.abs(np.arange(n + 1) - c)
                d_m = np.abs(ell - np.arange(n + 1))
                corr += delta @ table[np.ix_(d_k, d_m)]
        return corr

    def film_rows(self, rows, h0: float) -> np.ndarray:
        """Current film on the requested rows (pending updates included)."""
        if self._base is None:
            raise ContractViolationError("call deformation_full first")
        if self.contact == "line":
            raise ContractViolationError("line contact has a single row")
        out = np.empty((len(rows), self.n + 1))
        for k, r in enumerate(rows):
            out[k] = h0 + self.geometry[r] + self._base[r]
            if self._pending:
                out[k] += self._row_correction(r)
        return out

    def film_cols(self, cols, h0: float) -> np.ndarray:
        if self._base is None:
            raise ContractViolationError("call deformation_full first")
        out = np.empty((len(cols), self.n + 1))
        for k, c in enumerate(cols):
            out[k] = h0 + self.geometry[:, c] + self._base[:, c]
            if self._pending:
                out[k] += self._col_correction(c)
        return out

    # -- sensitivities --------------------------------------------------

    def sensitivity(self, d: int, axis_offset: int = 0) -> float:
        """d(film)/d(pressure) between nodes ``d`` apart along a line and
        ``axis_offset`` apart across lines (sign included)."""
        if self.contact == "line":
            return self.sign * float(self.kernel.table[abs(d)])
        return float(self.kernel.table[abs(d), abs(axis_offset)])
