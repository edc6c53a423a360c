"""Line relaxation sweeps for the thin-film contact problem.

The discrete balance at a node weighs pressure-driven flow against
entrainment of the lubricant film:

  R = [eX+ (u_E - u_P) + eX- (u_W - u_P)]/h
    + [eY+ (u_N - u_P) + eY- (u_S - u_P)]/h
    - h * (flux(i+1/2) - flux(i-1/2))

with face mobilities ``eX+- = h*(eps_P + eps_E/W)/2`` (``eps`` the
mobility ``rho H^3/(eta lambda)``) and limited upwind entrainment faces
``flux(i+1/2) = q_i + (phi/2)(q_{i+1} - q_i)``, ``q = rho H``, ratios
frozen at the current state.  Pressure stays nonnegative (cavitation),
so the converged state solves ``u >= 0, R <= 0, u*R = 0``.

Each x-line solve linearizes R in the line's pressure changes with the
film sensitivity truncated to nearest neighbours, giving a pentadiagonal
system for the interlocking factorization.  The Newton flavour applies
changes immediately line by line; the weighted-change flavour spreads a
quarter of each change (with opposite sign) to the four neighbours and
applies everything at the end of the sweep, which keeps the
strongly-coupled low-mobility region stable.  A hybrid switch picks the
flavour per line from the mobility-to-spacing ratio.
"""

from __future__ import annotations

import numpy as np

from ..aqif import factorize_wz, solve_w, solve_z
from ..bandcore import BandedMatrix
from ..errors import (ContractViolationError,
                      FactorizationBreakdownError, PaqifError)
from ..tvdcd import limiter_weight_plus
from .film import FilmModel
from .params import EhlParams, rheology

__all__ = ["hybrid_select", "newton_line_sweep", "weighted_change_sweep",
           "column_sweep", "splitting_ls4", "splitting_ls5",
           "force_balance_update", "reynolds_residual_field",
           "assemble_line_system", "kernel_nu", "SWITCH_THRESHOLD"]

SWITCH_THRESHOLD = 0.6
RATIO_GUARD = 1e-30


def _guarded_ratio(num, den, scale=None):
    """Slope ratio with a flat-data guard: where the upwind slope is
    negligible against the data scale the ratio is zero, which drops the
    face to first order instead of amplifying round-off."""
    if scale is None:
        floor = RATIO_GUARD
    else:
        floor = 1e-12 * max(float(scale), RATIO_GUARD)
    den_safe = np.where(np.abs(den) > floor, den, 1.0)
    return np.where(np.abs(den) > floor, num / den_safe, 0.0)


def grid_spacing(params: EhlParams, n: int) -> float:
    lo, hi = params.domain
    return (hi - lo) / n


def hybrid_select(eps_over_h, variant: str):
    """Splitting tags from the mobility ratio ``min(eps/hx, eps/hy)``.

    Above the switching threshold the diffusive coupling dominates and
    the plain line splitting applies; at or below it the kernel-coupled
    weighted-change splitting takes over.
    """
    eps_over_h = np.asarray(eps_over_h)
    if variant == "Lhs1":
        return np.where(eps_over_h > SWITCH_THRESHOLD, "Ls1", "Ls4")
    if variant == "Lhs2":
        return np.where(eps_over_h > SWITCH_THRESHOLD, "Ls0", "Ls5")
    raise ContractViolationError(f"unknown hybrid variant {variant!r}")


def kernel_nu(scheme: str, kappa: float) -> float:
    """Entrainment strength on the implicit kernel coupling: the plain
    family carries (2-kappa)/2, the reinforced family adds (1-kappa)/4."""
    if scheme in ("Ls1", "Ls4", "Lhs1", "newton"):
        return (2.0 - kappa) / 2.0
    if scheme in ("Ls0", "Ls5", "Lhs2"):
        return (2.0 - kappa) / 2.0 + (1.0 - kappa) / 4.0
    raise ContractViolationError(f"unknown scheme {scheme!r}")


def _faces(q_line, limiter, kappa):
    """Limited entrainment faces: returns (flux difference on interior
    nodes, frozen face weights phi+ and phi-)."""
    n = q_line.size - 1
    i = np.arange(1, n)
    dq = np.diff(q_line)
    scale = float(np.max(np.abs(q_line)))
    phi_plus = limiter_weight_plus(_guarded_ratio(dq[i], dq[i - 1], scale),
                                   limiter, kappa)
    phi_minus = np.zeros(n - 1)
    phi_minus[1:] = limiter_weight_plus(
        _guarded_ratio(dq[i[1:] - 1], dq[i[1:] - 2], scale), limiter, kappa)
    flux_plus = q_line[i] + 0.5 * phi_plus * dq[i]
    flux_minus = q_line[i - 1] + 0.5 * phi_minus * dq[i - 1]
    return flux_plus - flux_minus, phi_plus, phi_minus


def reynolds_residual_field(u, film, params: EhlParams, kappa: float,
                            limiter: str) -> np.ndarray:
    """Residual of the discrete balance on all interior nodes (boundary
    entries zero).  1-d arrays for the line contact, ``u[j, i]`` for the
    point contact."""
    rho, eta, eps = rheology(u, params, film=film)
    q = rho * film
    if u.ndim == 1:
        n = u.size - 1
        h = grid_spacing(params, n)
        r = np.zeros_like(u)
        i = np.arange(1, n)
        e_p = 0.5 * (eps[i] + eps[i + 1])
        e_m = 0.5 * (eps[i] + eps[i - 1])
        flux_diff, _, _ = _faces(q, limiter, kappa)
        r[i] = (e_p * (u[i + 1] - u[i])
                + e_m * (u[i - 1] - u[i])) / h - flux_diff
        return r
    n = u.shape[0] - 1
    h = grid_spacing(params, n)
    r = np.zeros_like(u)
    i = np.arange(1, n)
    for j in range(1, n):
        e_row = eps[j]
        exp_ = 0.5 * (e_row[i] + e_row[i + 1]) * h
        exm = 0.5 * (e_row[i] + e_row[i - 1]) * h
        eyp = 0.5 * (e_row[i] + eps[j + 1, i]) * h
        eym = 0.5 * (e_row[i] + eps[j - 1, i]) * h
        flux_diff, _, _ = _faces(q[j], limiter, kappa)
        r[j, i] = (exp_ * (u[j, i + 1] - u[j, i])
                   + exm * (u[j, i - 1] - u[j, i])) / h \
            + (eyp * (u[j + 1, i] - u[j, i])
               + eym * (u[j - 1, i] - u[j, i])) / h \
            - h * flux_diff
    return r


def _padded_matrix(entries: dict, n_int: int, beta: int = 2):
    """Banded line matrix over ``n_int`` unknowns, padded with pinned
    trailing rows to an even order."""
    n_sys = n_int + 1 if (n_int + 1) % 2 == 0 else n_int + 2
    mat = BandedMatrix(n_sys, beta)
    mat.bands[beta, :] = 1.0
    for off, vals in entries.items():
        lo = max(0, -off)
        mat.bands[beta + off, lo:n_int] = vals[lo:n_int]
    mat.bands[beta, n_int:] = 1.0
    mat._zero_out_of_range()
    return mat, n_sys


def assemble_line_system(u_line, q_line, rho_line, ex_p, ex_m, ey_p, ey_m,
                         resid, params: EhlParams, kappa: float,
                         limiter: str, scheme: str,
                         film_model: FilmModel, h: float,
                         jacobian: str = "scheme"):
    """Change system of one x-line: returns (matrix, rhs).

    ``ex/ey`` are the face mobility coefficients already scaled by the
    transverse spacing; ``resid`` the line residual.  The Newton scheme
    uses plain kernel sensitivities and plain change coupling; the
    weighted schemes use the distributive kernel and spread pattern.
    ``jacobian`` selects the linearization only (the right side, hence
    the converged state, never changes): ``"scheme"`` differentiates the
    limited faces as frozen, ``"first-order"`` differentiates their
    upwind reduction, ``"diagonal"`` keeps just the self-sensitivity,
    which is strictly dominant and serves as the last-resort smoother.
    """
    n = u_line.size - 1
    i = np.arange(1, n)
    _, phi_p, phi_m = _faces(q_line, limiter, kappa)
    if jacobian == "first-order":
        phi_p = np.zeros_like(phi_p)
        phi_m = np.zeros_like(phi_m)
    elif jacobian == "diagonal":
        phi_p = np.zeros_like(phi_p)
        phi_m = np.zeros_like(phi_m)
    elif jacobian != "scheme":
        raise ContractViolationError(f"unknown jacobian {jacobian!r}")
    weighted = scheme in ("Ls4", "Ls5")
    sens = film_model.sensitivity
    if weighted:
        nu = kernel_nu(scheme, kappa)
        cross = 2.0 * sens(0, 1) if film_model.contact == "point" else 0.0
        cross1 = 2.0 * sens(1, 1) if film_model.contact == "point" else 0.0
        ks0 = nu * (sens(0) - 0.25 * (2.0 * sens(1) + cross))
        ks1 = nu * (sens(1) - 0.25 * (sens(0) + sens(2) + cross1))
    else:
        ks0 = sens(0)
        ks1 = sens(1)

    rho_w = rho_line[i - 1]
    rho_c = rho_line[i]
    rho_e = rho_line[i + 1]
    a_p = 1.0 - 0.5 * phi_p      # d flux+ / d q_i
    b_p = 0.5 * phi_p            # d flux+ / d q_{i+1}
    a_m = 1.0 - 0.5 * phi_m      # d flux- / d q_{i-1}
    b_m = 0.5 * phi_m            # d flux- / d q_i
    hy = h if film_model.contact == "point" else 1.0

    if jacobian == "diagonal":
        zero = np.zeros(n - 1)
        c_m2 = zero
        c_m1 = zero
        c_0 = -hy * rho_c * abs(ks0)
        c_p1 = zero
        c_p2 = zero
    else:
        c_m2 = hy * (a_m * rho_w * ks1)
        c_m1 = -hy * (a_p * rho_c * ks1 - a_m * rho_w * ks0
                      - b_m * rho_c * ks1)
        c_0 = -hy * (a_p * rho_c * ks0 + b_p * rho_e * ks1
                     - a_m * rho_w * ks1 - b_m * rho_c * ks0)
        c_p1 = -hy * (a_p * rho_c * ks1 + b_p * rho_e * ks0
                      - b_m * rho_c * ks1)
        c_p2 = -hy * (b_p * rho_e * ks1)

    ey_sum = ey_p + ey_m
    if weighted:
        p_m2 = -0.25 * ex_m / h
        p_m1 = (1.25 * ex_m + 0.25 * ex_p) / h + 0.25 * ey_sum / h
        p_0 = -1.25 * (ex_p + ex_m + ey_sum) / h
        p_p1 = (1.25 * ex_p + 0.25 * ex_m) / h + 0.25 * ey_sum / h
        p_p2 = -0.25 * ex_p / h
    else:
        zeros = np.zeros(n - 1)
        p_m2 = zeros
        p_m1 = ex_m / h
        p_0 = -(ex_p + ex_m + ey_sum) / h
        p_p1 = ex_p / h
        p_p2 = zeros

    # orient for a positive diagonal: solve (-A) sigma = R
    entries = {
        -2: -(c_m2 + p_m2),
        -1: -(c_m1 + p_m1),
        0: -(c_0 + p_0),
        1: -(c_p1 + p_p1),
        2: -(c_p2 + p_p2),
    }
    # rows whose limited weights cancel the entrainment diagonal fall
    # back to the first-order face sensitivities (Jacobian only); the
    # absolute floor catches rows where the weights zero out the whole
    # entrainment block (possible on non-monotone transients)
    off_mag = (np.abs(entries[-2]) + np.abs(entries[-1])
               + np.abs(entries[1]) + np.abs(entries[2]))
    floor = 0.05 * hy * np.abs(rho_c) * abs(ks0)
    bad = np.abs(entries[0]) < np.maximum(0.2 * off_mag, floor)
    if np.any(bad):
        fo_m2 = hy * rho_w * ks1
        fo_m1 = -hy * (rho_c * ks1 - rho_w * ks0)
        fo_0 = -hy * (rho_c * ks0 - rho_w * ks1)
        fo_p1 = -hy * rho_c * ks1
        entries[-2] = np.where(bad, -(fo_m2 + p_m2), entries[-2])
        entries[-1] = np.where(bad, -(fo_m1 + p_m1), entries[-1])
        entries[0] = np.where(bad, -(fo_0 + p_0), entries[0])
        entries[1] = np.where(bad, -(fo_p1 + p_p1), entries[1])
        entries[2] = np.where(bad, -p_p2, entries[2])
    mat, n_sys = _padded_matrix(entries, n - 1)
    rhs = np.zeros(n_sys)
    rhs[:n - 1] = resid
    return mat, rhs


def _solve_line(mat, rhs, n_int):
    factors = factorize_wz(mat)
    sigma = solve_z(factors, solve_w(factors, rhs))
    return sigma[:n_int]


def robust_line_solve(u_line, q_line, rho_line, ex_p, ex_m, ey_p, ey_m,
                      resid, params, kappa, limiter, scheme, film_model,
                      h):
    """Solve the line system, degrading the linearization until the
    factorization succeeds (scheme faces, first-order faces, diagonal
    kernel).  The right side never changes, so the fixed point is the
    same whichever rung solves."""
    from ..errors import FactorizationBreakdownError

    n_int = u_line.size - 2
    last = None
    for jac in ("scheme", "first-order", "diagonal"):
        mat, rhs = assemble_line_system(
            u_line, q_line, rho_line, ex_p, ex_m, ey_p, ey_m, resid,
            params, kappa, limiter, scheme, film_model, h, jacobian=jac)
        try:
            return _solve_line(mat, rhs, n_int)
        except FactorizationBreakdownError as exc:
            last = exc
    raise last


def splitting_ls4(u_line, q_line, rho_line, ex_p, ex_m, ey_p, ey_m, resid,
                  params, kappa, limiter, film_model, h):
    """Distributive line system with the plain kernel strength."""
    return assemble_line_system(u_line, q_line, rho_line, ex_p, ex_m,
                                ey_p, ey_m, resid, params, kappa, limiter,
                                "Ls4", film_model, h)


def splitting_ls5(u_line, q_line, rho_line, ex_p, ex_m, ey_p, ey_m, resid,
                  params, kappa, limiter, film_model, h):
    """Distributive line system with the reinforced kernel strength."""
    return assemble_line_system(u_line, q_line, rho_line, ex_p, ex_m,
                                ey_p, ey_m, resid, params, kappa, limiter,
                                "Ls5", film_model, h)


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

def _line_quantities(state, params, j, kappa, limiter):
    """Face mobilities and entrainment data of x-line j from the current
    state (film rows fetched with pending corrections applied)."""
    u = state.u
    n = u.shape[0] - 1
    h = grid_spacing(params, n)
    films = state.film.film_rows([j - 1, j, j + 1], state.h0)
    rows = u[j - 1:j + 2]
    rho3, eta3, eps3 = rheology(rows, params, film=films)
    i = np.arange(1, n)
    e_row = eps3[1]
    ex_p = 0.5 * (e_row[i] + e_row[i + 1]) * h
    ex_m = 0.5 * (e_row[i] + e_row[i - 1]) * h
    ey_p = 0.5 * (e_row[i] + eps3[2, i]) * h
    ey_m = 0.5 * (e_row[i] + eps3[0, i]) * h
    q_line = rho3[1] * films[1]
    flux_diff, _, _ = _faces(q_line, limiter, kappa)
    resid = (ex_p * (u[j, i + 1] - u[j, i])
             + ex_m * (u[j, i - 1] - u[j, i])) / h \
        + (ey_p * (u[j + 1, i] - u[j, i])
           + ey_m * (u[j - 1, i] - u[j, i])) / h \
        - h * flux_diff
    return (u[j], q_line, rho3[1], ex_p, ex_m, ey_p, ey_m, resid,
            eps3[1], h)


def newton_line_sweep(state, params: EhlParams, kappa: float, limiter: str,
                      scheme: str = "Ls1", omega: float | None = None,
                      hybrid: str | None = None):
    """One x-direction sweep with immediate line updates.

    ``hybrid`` (``Lhs1``/``Lhs2``) switches each line between the Newton
    scheme and the corresponding weighted scheme by the line's smallest
    mobility ratio; weighted lines still update immediately here, the
    full deferred flavour lives in :func:`weighted_change_sweep`.
    Returns the infinity norm of the line residuals encountered.
    """
    omega = params.omega if omega is None else omega
    u = state.u
    n = u.shape[0] - 1
    h = grid_spacing(params, n)
    worst = 0.0
    for j in range(1, n):
        (u_line, q_line, rho_line, ex_p, ex_m, ey_p, ey_m, resid,
         eps_line, _) = _line_quantities(state, params, j, kappa, limiter)
        line_scheme = scheme
        if hybrid is not None:
            tag = hybrid_select(float(np.min(eps_line)) / h, hybrid)
            line_scheme = str(tag)
        sigma = robust_line_solve(
            u_line, q_line, rho_line, ex_p, ex_m, ey_p, ey_m, resid,
            params, kappa, limiter, line_scheme, state.film, h)
        if not np.all(np.isfinite(sigma)):
            raise PaqifError(f"non-finite change on line {j}")
        np.clip(sigma, -params.max_change, params.max_change, out=sigma)
        new_line = np.maximum(0.0, u[j, 1:n] + omega * sigma)
        delta = np.zeros(n + 1)
        delta[1:n] = new_line - u[j, 1:n]
        u[j, 1:n] = new_line
        state.film.note_line_update("row", j, delta, u)
        worst = max(worst, float(np.max(np.abs(resid))))
    return worst


def weighted_change_sweep(state, params: EhlParams, kappa: float,
                          limiter: str, scheme: str = "Ls4",
                          omega: float | None = None):
    """One x-direction sweep with deferred, distributed updates.

    All line systems assemble against the sweep-start state; the changes
    spread a quarter of themselves (negated) to the four neighbours and
    apply only once the sweep completes.
    """
    omega = params.omega if omega is None else omega
    u = state.u
    n = u.shape[0] - 1
    sigma = np.zeros_like(u)
    worst = 0.0
    for j in range(1, n):
        (u_line, q_line, rho_line, ex_p, ex_m, ey_p, ey_m, resid,
         _, h) = _line_quantities(state, params, j, kappa, limiter)
        sigma[j, 1:n] = np.clip(robust_line_solve(
            u_line, q_line, rho_line, ex_p, ex_m, ey_p, ey_m, resid,
            params, kappa, limiter, scheme, state.film, h),
            -params.max_change, params.max_change)
        worst = max(worst, float(np.max(np.abs(resid))))
    if not np.all(np.isfinite(sigma)):
        raise PaqifError("non-finite change in weighted sweep")
    spread = np.zeros_like(sigma)
    spread[:, 1:] += sigma[:, :-1]
    spread[:, :-1] += sigma[:, 1:]
    spread[1:, :] += sigma[:-1, :]
    spread[:-1, :] += sigma[1:, :]
    u_new = np.maximum(0.0, u + omega * (sigma - 0.25 * spread))
    u_new[0, :] = 0.0
    u_new[-1, :] = 0.0
    u_new[:, 0] = 0.0
    u_new[:, -1] = 0.0
    state.u = u_new
    state.film.deformation_full(u_new)
    return worst


def column_sweep(state, params: EhlParams, kappa: float, limiter: str,
                 omega: float | None = None):
    """One y-direction sweep (point contact only).

    Entrainment runs along x, so a column solve relaxes the transverse
    mobility coupling implicitly (tridiagonal) with the kernel's
    nearest-neighbour film sensitivity keeping low-mobility rows
    solvable.  The residual is the same discrete balance the x-sweep
    drives; updates apply immediately column by column.
    """
    omega = params.omega if omega is None else omega
    u = state.u
    n = u.shape[0] - 1
    h = grid_spacing(params, n)
    worst = 0.0
    sens = state.film.sensitivity
    for i in range(1, n):
        lo = max(0, i - 2)
        cols_idx = list(range(lo, i + 2))
        films = state.film.film_cols(cols_idx, state.h0)
        cols = np.ascontiguousarray(u[:, lo:i + 2].T)
        rho_c, eta_c, eps_c = rheology(cols, params, film=films)
        pos = i - lo                      # index of column i in the bundle
        j = np.arange(1, n)
        e_col = eps_c[pos]
        ey_p = 0.5 * (e_col[j] + e_col[j + 1]) * h
        ey_m = 0.5 * (e_col[j] + e_col[j - 1]) * h
        ex_p = 0.5 * (e_col[j] + eps_c[pos + 1, j]) * h
        ex_m = 0.5 * (e_col[j] + eps_c[pos - 1, j]) * h
        q = rho_c * films                 # columns i-2..i+1 as rows
        dq_p = q[pos + 1, j] - q[pos, j]
        dq_m = q[pos, j] - q[pos - 1, j]
        q_scale = float(np.max(np.abs(q)))
        phi_p = limiter_weight_plus(_guarded_ratio(dq_p, dq_m, q_scale),
                                    limiter, kappa)
        if pos >= 2:
            dq_mm = q[pos - 1, j] - q[pos - 2, j]
            phi_m = limiter_weight_plus(
                _guarded_ratio(dq_m, dq_mm, q_scale), limiter, kappa)
        else:
            phi_m = np.zeros(n - 1)
        flux_p = q[pos, j] + 0.5 * phi_p * dq_p
        flux_m = q[pos - 1, j] + 0.5 * phi_m * dq_m
        resid = (ex_p * (u[j, i + 1] - u[j, i])
                 + ex_m * (u[j, i - 1] - u[j, i])) / h \
            + (ey_p * (u[j + 1, i] - u[j, i])
               + ey_m * (u[j - 1, i] - u[j, i])) / h \
            - h * (flux_p - flux_m)
        # implicit: transverse mobility plus the kernel coupling of the
        # column's own changes through the entrainment faces
        a_p = 1.0 - 0.5 * phi_p
        b_p = 0.5 * phi_p
        a_m = 1.0 - 0.5 * phi_m
        b_m = 0.5 * phi_m
        rho_i = rho_c[pos, j]
        rho_w = rho_c[pos - 1, j]
        rho_e = rho_c[pos + 1, j]
        c_diag = -h * ((a_p - b_m) * rho_i * sens(0, 0)
                       + (b_p * rho_e - a_m * rho_w) * sens(1, 0))
        c_off = -h * ((a_p - b_m) * rho_i * sens(0, 1)
                      + (b_p * rho_e - a_m * rho_w) * sens(1, 1))
        diag_full = -(ey_p + ey_m + ex_p + ex_m) / h + c_diag
        # degenerate weight combinations cancel the kernel coupling; fall
        # back to first-order face sensitivities on those rows
        floor = 0.05 * h * np.abs(rho_i) * sens(0, 0)
        bad = np.abs(diag_full) < floor
        if np.any(bad):
            fo_diag = -h * (rho_i * sens(0, 0) - rho_w * sens(1, 0))
            fo_off = -h * (rho_i * sens(0, 1) - rho_w * sens(1, 1))
            c_diag = np.where(bad, fo_diag, c_diag)
            c_off = np.where(bad, fo_off, c_off)
            diag_full = -(ey_p + ey_m + ex_p + ex_m) / h + c_diag
        entries = {
            -1: -(ey_m / h + c_off),
            0: -diag_full,
            1: -(ey_p / h + c_off),
        }
        mat, n_sys = _padded_matrix(entries, n - 1)
        rhs = np.zeros(n_sys)
        rhs[:n - 1] = resid
        try:
            sigma = _solve_line(mat, rhs, n - 1)
        except FactorizationBreakdownError:
            # last resort: strictly dominant diagonal-kernel smoother
            diag = (ey_p + ey_m + ex_p + ex_m) / h \
                + h * np.abs(rho_i) * sens(0, 0)
            mat, n_sys = _padded_matrix({0: diag}, n - 1)
            sigma = _solve_line(mat, rhs, n - 1)
        if not np.all(np.isfinite(sigma)):
            raise PaqifError(f"non-finite change on column {i}")
        np.clip(sigma, -params.max_change, params.max_change, out=sigma)
        new_col = np.maximum(0.0, u[1:n, i] + omega * sigma)
        delta = np.zeros(n + 1)
        delta[1:n] = new_col - u[1:n, i]
        u[1:n, i] = new_col
        state.film.note_line_update("col", i, delta, u)
        worst = max(worst, float(np.max(np.abs(resid))))
    return worst


def force_balance_update(state, params: EhlParams):
    """Relax the offset film constant toward the load constraint:
    ``h0 <- h0 - c (target - h^d sum(u))``.  A load deficit lowers the
    gap, which raises pressures.  The step is capped so the offset never
    outruns the pressure response."""
    n = (state.u.shape[0] if state.u.ndim == 1 else state.u.shape[0]) - 1
    h = grid_spacing(params, n)
    w = h if state.u.ndim == 1 else h * h
    integral = w * float(np.sum(state.u))
    deficit = params.load_target - integral
    step = np.clip(params.relax_c * deficit, -params.max_h0_step,
                   params.max_h0_step)
    state.h0 = state.h0 - step
    state.force_history.append(abs(deficit))
    return state.h0, deficit
