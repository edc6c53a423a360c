"""Projected iterative splitting machinery and LCP diagnostics.

Houses the complementarity problem type, the projected change-splitting
step (clamping the change, as the convergence theorem states it), the
projected-SOR reference oracle used to cross-check every LCP solver in
the package, empirical error-bound ratios, and a power-iteration
spectral-radius estimate for regular splittings.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import _kernels
from .aqif import aqif_solve
from .bandcore import BandedMatrix, band_matvec, project_nonneg
from .errors import ContractViolationError, NonConvergenceError

__all__ = [
    "LcpProblem", "SplittingOperators", "projected_splitting_step",
    "psor_oracle", "error_bound_check", "splitting_spectral_radius",
]


@dataclass
class LcpProblem:
    """Find ``u >= 0`` with ``L u >= f`` and ``u^T (L u - f) = 0``."""
    l: BandedMatrix
    f: np.ndarray
    dense_tail: np.ndarray | None = None  # kernel coupling hook (EHL)

    def __post_init__(self):
        self.f = np.asarray(self.f, dtype=np.float64)
        if self.f.shape != (self.l.order,):
            raise ContractViolationError("rhs length mismatch")

    def energy(self, u: np.ndarray) -> float:
        """Quadratic objective ``G(u) = 0.5 u^T L u - f^T u``."""
        return 0.5 * float(u @ band_matvec(self.l, u)) - float(self.f @ u)

    def complementarity_residual(self, u: np.ndarray) -> float:
        lam = band_matvec(self.l, u) - self.f
        return float(np.max(np.abs(np.minimum(u, lam))))


@dataclass
class SplittingOperators:
    """Additive splitting ``L = L+ + L0 + L-`` with under-relaxation.

    ``lzero`` is the solved (banded) part, ``lplus`` acts on already
    updated values, ``lminus`` on the previous iterate.
    """
    lzero: BandedMatrix
    lminus: BandedMatrix
    lplus: BandedMatrix
    omega: float = 0.5

    def total_matvec(self, u: np.ndarray) -> np.ndarray:
        return (band_matvec(self.lzero, u) + band_matvec(self.lminus, u)
                + band_matvec(self.lplus, u))


def projected_splitting_step(s: SplittingOperators, u_prev: np.ndarray,
                             u_partial: np.ndarray, f: np.ndarray,
                             clamp: str = "sigma"):
    """One projected splitting step.

    Solves ``L0 sigma = f - (L- + L0) u_prev - L+ u_partial``, clamps, and
    returns ``(sigma, u_prev + omega*sigma)``.  ``clamp="sigma"`` clamps
    the change exactly as the convergence theorem states (the iterate can
    then never decrease); ``clamp="iterate"`` clamps the updated iterate
    instead, which the EHL drivers need since pressures must be able to
    fall.
    """
    if not 0.0 < s.omega < 1.0 and clamp == "sigma":
        raise ContractViolationError("omega must lie in (0, 1)")
    rhs = (np.asarray(f, dtype=np.float64)
           - band_matvec(s.lminus, u_prev) - band_matvec(s.lzero, u_prev)
           - band_matvec(s.lplus, u_partial))
    sigma = aqif_solve(s.lzero, rhs)
    if clamp == "sigma":
        sigma = project_nonneg(sigma)
        u_next = u_prev + s.omega * sigma
    elif clamp == "iterate":
        u_next = project_nonneg(u_prev + s.omega * sigma)
        sigma = (u_next - u_prev) / s.omega
    else:
        raise ContractViolationError(f"unknown clamp mode {clamp!r}")
    return sigma, u_next


def psor_oracle(problem: LcpProblem, omega: float = 1.0, tol: float = 1e-12,
                max_sweeps: int = 200_000) -> np.ndarray:
    """Projected SOR reference solution (componentwise Gauss-Seidel with
    clamp to zero, natural ordering).

    Brute-force oracle: independent of the factorization path, used to
    validate every other LCP solver.
    """
    if np.any(problem.l.bands[problem.l.beta] <= 0.0):
        raise ContractViolationError("PSOR needs a positive diagonal")
    u = np.zeros(problem.l.order)
    sweeps, change = _kernels.psor_sweeps(problem.l.bands, problem.f, u,
                                          omega, tol, max_sweeps)
    if change > tol:
        raise NonConvergenceError("PSOR hit its sweep cap",
                                  residual=float(change), iterations=sweeps)
    return u


@dataclass
class ErrorBoundReport:
    """Empirical constants of the splitting error bounds."""
    ratios: dict = field(default_factory=dict)
    numerators: dict = field(default_factory=dict)
    denominators: dict = field(default_factory=dict)

    def bounded_by(self, c: float) -> bool:
        return all(np.isfinite(v) and v <= c for v in self.ratios.values())


def error_bound_check(u_exact: np.ndarray, u_next: np.ndarray,
                      u_curr: np.ndarray) -> ErrorBoundReport:
    """Ratios ``||u - u_next||_p / ||u_next - u_curr||_p``, p in {1,2,inf}."""
    report = ErrorBoundReport()
    err = u_exact - u_next
    step = u_next - u_curr
    for p in (1, 2, np.inf):
        num = float(np.linalg.norm(err, p))
        den = float(np.linalg.norm(step, p))
        report.numerators[p] = num
        report.denominators[p] = den
        report.ratios[p] = num / den if den > 0 else np.inf
    return report


def splitting_spectral_radius(s: SplittingOperators, max_iter: int = 2000,
                              tol: float = 1e-8, seed: int = 0):
    """Power-iteration estimate of ``rho(M^-1 N)`` for ``L = M - N`` with
    ``M = L0 + L+`` (the part a sweep applies implicitly).

    Returns ``(estimate, converged)``; a hit iteration cap returns the
    best windowed estimate flagged approximate.
    """
    m_dense = s.lzero.to_dense() + s.lplus.to_dense()
    n_dense = -s.lminus.to_dense()
    if not np.any(n_dense):
        return 0.0, True
    lu, piv = scipy.linalg.lu_factor(m_dense, check_finite=False)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(m_dense.shape[0])
    v /= np.linalg.norm(v)
    window: list[float] = []
    for _ in range(max_iter):
        w = scipy.linalg.lu_solve((lu, piv), n_dense @ v, check_finite=False)
        nrm = float(np.linalg.norm(w))
        if nrm == 0.0:
            return 0.0, True
        window.append(nrm)
        v = w / nrm
        if len(window) >= 8:
            recent = window[-8:]
            mean = sum(recent) / len(recent)
            if mean > 0 and (max(recent) - min(recent)) / mean <= tol:
                return mean, True
    recent = window[-8:]
    return sum(recent) / len(recent), False
