"""Steady-state contact solver drivers.

The point-contact driver alternates x-direction and y-direction sweeps,
switching each x-line between the Newton and weighted-change flavours by
its mobility ratio, and relaxes the offset film constant toward the load
constraint after every outer iteration.  The line-contact driver runs
the same machinery on its single line with a per-node hybrid switch.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import (ContractViolationError, FactorizationBreakdownError,
                      NonConvergenceError, PaqifError)
from .film import FilmModel
from .params import EhlParams, hertzian_init, rheology
from .sweeps import (assemble_line_system, column_sweep, force_balance_update,
                     grid_spacing, hybrid_select, newton_line_sweep,
                     reynolds_residual_field, robust_line_solve,
                     weighted_change_sweep, _faces, _line_quantities,
                     _padded_matrix, _solve_line, kernel_nu,
                     SWITCH_THRESHOLD)

__all__ = ["EhlState", "solve_ehl"]


@dataclass
class EhlState:
    """Pressure/film iterate plus its convergence history."""
    u: np.ndarray
    h0: float
    film: FilmModel
    residual_history: list = field(default_factory=list)
    force_history: list = field(default_factory=list)
    outer_iterations: int = 0

    def film_field(self) -> np.ndarray:
        return self.film.film_full(self.u, self.h0)

    def complementarity_residual(self, params, kappa, limiter) -> float:
        """max |min(u, -R)| scaled to the continuous equation."""
        n = self.u.shape[0] - 1
        h = grid_spacing(params, n)
        film = self.film.film_full(self.u, self.h0)
        r = reynolds_residual_field(self.u, film, params, kappa, limiter)
        scale = h * h if self.u.ndim == 2 else h
        comp = np.minimum(self.u, -r)
        return float(np.max(np.abs(comp))) / scale


def _initial_state(params: EhlParams, intervals: int) -> EhlState:
    lo, hi = params.domain
    h = (hi - lo) / intervals
    film = FilmModel(params.contact, intervals, h, lo)
    if params.contact == "point":
        gx, gy = np.meshgrid(film.x, film.x)
        u = hertzian_init(gx, gy)
        unit_load = 2.0 * np.pi / 3.0
        u[0, :] = u[-1, :] = 0.0
        u[:, 0] = u[:, -1] = 0.0
    else:
        u = hertzian_init(film.x)
        unit_load = np.pi / 2.0
        u[0] = u[-1] = 0.0
    # the dry-contact guess scaled to carry the prescribed load, so the
    # offset relaxation starts near balance
    u *= params.load_target / unit_load
    state = EhlState(u=u, h0=params.h0, film=film)
    film.deformation_full(u)
    return state


def _hybrid_x_sweep(state, params, kappa, limiter, variant, omega):
    """x-sweep with the per-line switch.

    Diffusive lines (mobility ratio above the threshold) run the Newton
    line solve with immediate updates; the rest assemble the weighted
    system whose distributed changes apply at the end of the sweep.
    """
    u = state.u
    n = u.shape[0] - 1
    h = grid_spacing(params, n)
    sigma = np.zeros_like(u)
    any_weighted = False
    worst = 0.0
    newton_scheme, weighted_scheme = (("Ls1", "Ls4") if variant == "Lhs1"
                                      else ("Ls0", "Ls5"))
    for j in range(1, n):
        (u_line, q_line, rho_line, ex_p, ex_m, ey_p, ey_m, resid,
         eps_line, _) = _line_quantities(state, params, j, kappa, limiter)
        worst = max(worst, float(np.max(np.abs(resid))))
        ratio = float(np.min(eps_line)) / h
        if ratio > SWITCH_THRESHOLD:
            sig = robust_line_solve(
                u_line, q_line, rho_line, ex_p, ex_m, ey_p, ey_m, resid,
                params, kappa, limiter, newton_scheme, state.film, h)
            if not np.all(np.isfinite(sig)):
                raise PaqifError(f"non-finite change on line {j}")
            np.clip(sig, -params.max_change, params.max_change,
                    out=sig)
            new_line = np.maximum(0.0, u[j, 1:n] + omega * sig)
            delta = np.zeros(n + 1)
            delta[1:n] = new_line - u[j, 1:n]
            u[j, 1:n] = new_line
            state.film.note_line_update("row", j, delta, u)
        else:
            any_weighted = True
            sigma[j, 1:n] = np.clip(robust_line_solve(
                u_line, q_line, rho_line, ex_p, ex_m, ey_p, ey_m, resid,
                params, kappa, limiter, weighted_scheme, state.film, h),
                -params.max_change, params.max_change)
    if any_weighted:
        if not np.all(np.isfinite(sigma)):
            raise PaqifError("non-finite change in weighted lines")
        spread = np.zeros_like(sigma)
        spread[:, 1:] += sigma[:, :-1]
        spread[:, :-1] += sigma[:, 1:]
        spread[1:, :] += sigma[:-1, :]
        spread[:-1, :] += sigma[1:, :]
        u_new = np.maximum(0.0, u + omega * (sigma - 0.25 * spread))
        u_new[0, :] = u_new[-1, :] = 0.0
        u_new[:, 0] = u_new[:, -1] = 0.0
        state.u = u_new
        state.film.deformation_full(u_new)
    return worst


def _line_contact_sweep(state, params, kappa, limiter, variant, omega):
    """Single-line solve of the 1-d contact with a per-node switch.

    Diffusive nodes take the Newton row pattern, low-mobility nodes the
    weighted row pattern (distributive kernel and spread); the update
    distributes the weighted changes to their neighbours.
    """
    u = state.u
    n = u.size - 1
    h = grid_spacing(params, n)
    film = state.film.film_full(u, state.h0)
    rho, eta, eps = rheology(u, params, film=film)
    i = np.arange(1, n)
    e_p = 0.5 * (eps[i] + eps[i + 1])
    e_m = 0.5 * (eps[i] + eps[i - 1])
    q = rho * film
    flux_diff, phi_p, phi_m = _faces(q, limiter, kappa)
    resid = (e_p * (u[i + 1] - u[i]) + e_m * (u[i - 1] - u[i])) / h \
        - flux_diff
    zeros = np.zeros(n - 1)
    newton_scheme, weighted_scheme = (("Ls1", "Ls4") if variant == "Lhs1"
                                      else ("Ls0", "Ls5"))
    mat_n, rhs_n = assemble_line_system(
        u, q, rho, e_p, e_m, zeros, zeros, resid, params, kappa, limiter,
        newton_scheme, state.film, h)
    mat_w, rhs_w = assemble_line_system(
        u, q, rho, e_p, e_m, zeros, zeros, resid, params, kappa, limiter,
        weighted_scheme, state.film, h)
    weighted_mask = (eps[i] / h) <= SWITCH_THRESHOLD
    mat = mat_n.copy()
    cols = np.where(weighted_mask)[0]
    mat.bands[:, cols] = mat_w.bands[:, cols]
    try:
        sigma = _solve_line(mat, rhs_n, n - 1)
    except FactorizationBreakdownError:
        sigma = robust_line_solve(u, q, rho, e_p, e_m, zeros, zeros,
                                  resid, params, kappa, limiter,
                                  weighted_scheme, state.film, h)
    sigma = np.clip(sigma, -params.max_change, params.max_change)
    if not np.all(np.isfinite(sigma)):
        raise PaqifError("non-finite change in line-contact sweep")
    full_sigma = np.zeros(n + 1)
    full_sigma[1:n] = sigma
    spread = np.zeros(n + 1)
    w_sigma = np.zeros(n + 1)
    w_sigma[1:n][weighted_mask] = sigma[weighted_mask]
    spread[1:] += w_sigma[:-1]
    spread[:-1] += w_sigma[1:]
    u_new = np.maximum(0.0, u + omega * (full_sigma - 0.25 * spread))
    u_new[0] = u_new[-1] = 0.0
    state.u = u_new
    state.film.deformation_full(u_new)
    return float(np.max(np.abs(resid)))


def solve_ehl(params: EhlParams, intervals: int, scheme: str = "Lhs1",
              kappa: float = 1 / 3, limiter: str = "kappa",
              tol: float = 1e-6, tol_fb: float = 1e-4,
              max_outer: int = 10000, omega: float | None = None,
              state: EhlState | None = None, force_every: int = 5,
              collect=None) -> EhlState:
    """Drive the contact problem to a converged pressure/film pair.

    Point contact alternates hybrid x-sweeps with y-sweeps; the line
    contact iterates its single-line hybrid solve.  The offset constant
    relaxes toward the load constraint each outer iteration.  Stops when
    the complementarity residual falls below ``tol`` and the load error
    below ``tol_fb``; residual growth over twenty consecutive iterations
    raises :class:`NonConvergenceError`.
    """
    if scheme not in ("Lhs1", "Lhs2"):
        raise ContractViolationError(f"unknown scheme {scheme!r}")
    if not -1.0 <= kappa <= 1.0:
        raise ContractViolationError("kappa must lie in [-1, 1]")
    omega = params.omega if omega is None else omega
    if state is None:
        state = _initial_state(params, intervals)
    grow = 0
    best = np.inf
    for outer in range(max_outer):
        if params.contact == "point":
            _hybrid_x_sweep(state, params, kappa, limiter, scheme, omega)
            column_sweep(state, params, kappa, limiter, omega)
        else:
            _line_contact_sweep(state, params, kappa, limiter, scheme,
                                omega)
        if (outer + 1) % force_every == 0:
            _, deficit = force_balance_update(state, params)
        else:
            deficit = state.force_history[-1] if state.force_history \
                else np.inf
        res = state.complementarity_residual(params, kappa, limiter)
        state.residual_history.append(res)
        state.outer_iterations = outer + 1
        if collect is not None:
            collect(state, res, deficit)
        if res <= tol and abs(deficit) <= tol_fb:
            return state
        if res < best:
            best = res
            grow = 0
        else:
            grow += 1
            if grow >= 20 and res > 1e3 * max(best, tol):
                raise NonConvergenceError(
                    "contact iteration diverging", residual=res,
                    iterations=outer + 1)
    raise NonConvergenceError("contact iteration exhausted its budget",
                              residual=state.residual_history[-1],
                              iterations=max_outer)
