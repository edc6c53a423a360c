"""Operating parameters, rheology and initial data for the contact
solvers.

All solves run in the standard dimensionless form: pressure scaled by
the maximum dry-contact pressure ``p_H``, coordinates by the contact
half-width, film thickness by its parabolic-gap scale.  The load and
lubricant numbers (M, L) pin the dimensionless group ``lambda`` and the
physical ``p_H`` that the viscosity and density laws need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractViolationError

__all__ = [
    "EhlParams", "rheology", "hertzian_init", "moes_convert",
    "point_dimensionless", "line_dimensionless", "moes_from_line",
]

P0_DEFAULT = 1.98e8       # Pa, pressure-viscosity reference constant
Z_DEFAULT = 0.68          # pressure-viscosity index
DENSITY_A = 0.59e9        # Pa, density-law constants
DENSITY_B = 1.34


@dataclass
class EhlParams:
    """Physical and dimensionless constants of one contact problem."""
    contact: str                      # "point" or "line"
    moes_m: float
    moes_l: float
    alpha: float = 1.7e-8             # pressure-viscosity coefficient [1/Pa]
    z: float = Z_DEFAULT
    p0: float = P0_DEFAULT
    p_hertz: float = 0.0              # maximum dry-contact pressure [Pa]
    lam: float = 0.0                  # speed parameter of the thin-film eq.
    h0: float = -0.5                  # central offset film thickness
    compressible: bool = True
    domain: tuple = (-2.5, 2.5)
    relax_c: float = 0.05             # force-balance relaxation, 0.01..0.1
    omega: float = 0.5                # sweep under-relaxation
    load_target: float = 0.0          # dimensionless load integral
    max_change: float = 0.1           # per-node cap on one sweep's change
    max_h0_step: float = 0.02         # per-iteration cap on the offset

    def __post_init__(self):
        if self.contact not in ("point", "line"):
            raise ContractViolationError("contact must be 'point' or 'line'")
        if not 0.01 <= self.relax_c <= 0.1:
            raise ContractViolationError("relaxation c must lie in "
                                         "[0.01, 0.1]")
        if min(self.alpha, self.z, self.p0) <= 0.0:
            raise ContractViolationError("physical constants must be "
                                         "positive")
        if self.lam <= 0.0 or self.p_hertz <= 0.0:
            raise ContractViolationError(
                "p_hertz and lam must be derived before use "
                "(see point_dimensionless / line_dimensionless)")

    @classmethod
    def point_from_moes(cls, m: float, l: float, alpha: float = 1.7e-8,
                        **kw) -> "EhlParams":
        p_h, lam = point_dimensionless(m, l, alpha)
        kw.setdefault("load_target", 3.0 * math.pi / 2.0)
        return cls(contact="point", moes_m=m, moes_l=l, alpha=alpha,
                   p_hertz=p_h, lam=lam, **kw)

    @classmethod
    def line_from_loads(cls, g: float, u: float, w: float,
                        alpha: float = 1.7e-8, **kw) -> "EhlParams":
        m, l = moes_from_line(g, u, w)
        p_h, lam = line_dimensionless(g, u, w, alpha)
        kw.setdefault("load_target", math.pi / 2.0)
        return cls(contact="line", moes_m=m, moes_l=l, alpha=alpha,
                   p_hertz=p_h, lam=lam, **kw)


def point_dimensionless(m: float, l: float, alpha: float):
    """(p_H, lambda) of the circular contact from its (M, L) numbers.

    Built from the dry-contact relations ``p_H = 3F/(2 pi a^2)``,
    ``a^3 = 3FR/E'``, the speed group ``lambda = 6 eta0 u_s R^2/(a^3 p_H)``
    and the number definitions ``M = W (2U)^{-3/4}``, ``L = G (2U)^{1/4}``
    with ``W = F/(E'R^2)``, ``G = alpha E'``, ``2U = eta0 u_s/(E'R)``.
    Everything except (M, L, alpha) cancels.
    """
    if min(m, l, alpha) <= 0.0:
        raise ContractViolationError("M, L, alpha must be positive")
    p_h = l * (3.0 * m) ** (1.0 / 3.0) / (2.0 * math.pi * alpha)
    lam = 4.0 * math.pi * 3.0 ** (-1.0 / 3.0) * m ** (-4.0 / 3.0)
    return p_h, lam


def line_dimensionless(g: float, u: float, w: float, alpha: float):
    """(p_H, lambda) of the line contact from (G, U, W).

    Uses ``b = R sqrt(8W/pi)``, ``p_H = E' sqrt(W/(2 pi))`` and
    ``lambda = 6 eta0 u_s R^2/(b^3 p_H)`` with ``2U = eta0 u_s/(E'R)``;
    the radius and modulus cancel.
    """
    if min(g, u, w, alpha) <= 0.0:
        raise ContractViolationError("G, U, W, alpha must be positive")
    e_prime = g / alpha
    p_h = e_prime * math.sqrt(w / (2.0 * math.pi))
    lam = 12.0 * u / ((8.0 * w / math.pi) ** 1.5
                      * math.sqrt(w / (2.0 * math.pi)))
    return p_h, lam


def moes_from_line(g: float, u: float, w: float):
    """Line-contact load/material numbers: ``M = W (2U)^{-1/2}``,
    ``L = G (2U)^{1/4}``."""
    two_u = 2.0 * u
    return w * two_u ** -0.5, g * two_u ** 0.25


def moes_convert(g: float = None, u: float = None, w: float = None,
                 m: float = None, l: float = None):
    """Convert between line-contact (G, U, W) and (M, L).

    Given (G, U, W) returns (M, L); given (M, L, G) inverts for (U, W).
    Over- or under-specified combinations raise.
    """
    have_guw = all(v is not None for v in (g, u, w))
    have_ml = m is not None and l is not None
    if have_guw and not have_ml:
        return moes_from_line(g, u, w)
    if have_ml and g is not None and u is None and w is None:
        two_u = (l / g) ** 4.0
        return two_u / 2.0, m * two_u ** 0.5
    raise ContractViolationError(
        "provide (G, U, W) for (M, L), or (M, L, G) for (U, W)")


def rheology(u, params: EhlParams, film=None):
    """(density, viscosity, eps) of the lubricant at pressure ``u``.

    Density follows the rational compressibility law, viscosity the
    pressure-exponent law; incompressible mode returns unit properties.
    ``eps = rho * film^3 / (viscosity * lambda)`` when the film is given,
    otherwise the coefficient multiplying ``film^3``.
    """
    u = np.asarray(u, dtype=np.float64)
    if params.compressible:
        p = u * params.p_hertz
        rho = (DENSITY_A + DENSITY_B * p) / (DENSITY_A + p)
        arg = (params.alpha * params.p0 / params.z) \
            * (-1.0 + (1.0 + p / params.p0) ** params.z)
        # transient iterates can overshoot physically meaningful
        # pressures; cap the exponent instead of overflowing
        eta = np.exp(np.minimum(arg, 200.0))
    else:
        rho = np.ones_like(u)
        eta = np.ones_like(u)
    coeff = rho / (eta * params.lam)
    if film is not None:
        # transient iterates may pinch the film nonpositive; the mobility
        # then floors at (almost) zero instead of turning negative
        gap = np.maximum(np.asarray(film), 1e-8)
        return rho, eta, coeff * gap ** 3
    return rho, eta, coeff


def hertzian_init(x, y=None):
    """Dry-contact pressure as the initial guess: the half-sphere
    ``sqrt(1 - x^2 - y^2)`` (point) or half-circle ``sqrt(1 - x^2)``
    (line), zero outside the unit contact."""
    x = np.asarray(x, dtype=np.float64)
    if y is None:
        return np.sqrt(np.maximum(0.0, 1.0 - x * x))
    y = np.asarray(y, dtype=np.float64)
    return np.sqrt(np.maximum(0.0, 1.0 - x * x - y * y))
