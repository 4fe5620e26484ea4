"""Pointwise kernels for Fermi-Dirac, Bose-Einstein and Maxwell statistics.

Every kernel is parametrised by the statistics sign tau: +1 for fermions,
-1 for bosons and 0 for the classical limit.  Equilibria take the form

    K(p) = 1 / (exp(-alpha . P(p)) + tau),

with P(p) = (1, p, |p|^2 / (2 m)) the vector of collision invariants, so
tau = 0 degenerates to the Maxwellian exp(alpha . P(p)).
"""

from __future__ import annotations

import math
from enum import IntEnum

import numpy as np
from scipy.integrate import quad
from scipy.special import xlogy

from .errors import DomainError, FeasibilityError

__all__ = [
    "ParticleStatistics",
    "eval_equilibrium",
    "entropy_integrand",
    "potential_integrand",
    "hessian_weight",
    "eta_integrals",
]


class ParticleStatistics(IntEnum):
    """Statistics selector; the integer value is the sign tau."""

    FERMION = 1
    CLASSICAL = 0
    BOSON = -1

    @classmethod
    def parse(cls, text: str) -> "ParticleStatistics":
        key = text.strip().lower()
        table = {
            "fermion": cls.FERMION,
            "f": cls.FERMION,
            "classical": cls.CLASSICAL,
            "c": cls.CLASSICAL,
            "boson": cls.BOSON,
            "b": cls.BOSON,
        }
        if key not in table:
            raise DomainError(f"unknown statistics {text!r}")
        return table[key]


def eval_equilibrium(exponent, tau):
    """Equilibrium value(s) K for exponent x = alpha . P(p).

    For tau = -1 every exponent must be strictly negative; otherwise the
    Bose branch 1/(exp(-x) - 1) is undefined or negative.
    """
    x = np.asarray(exponent, dtype=float)
    if tau == 0:
        return np.exp(x)
    if tau == 1:
        with np.errstate(over="ignore"):
            return 1.0 / (np.exp(-x) + 1.0)
    if tau == -1:
        if x.size and np.max(x) >= 0.0:
            raise FeasibilityError(
                "Bose equilibrium requires -alpha . P(p) > 0 at every node"
            )
        return 1.0 / np.expm1(-x)
    raise DomainError(f"tau must be one of -1, 0, +1, got {tau}")


def entropy_integrand(z, tau):
    """Entropy density h_tau(z) = z ln z + (1/tau) (1 - tau z) ln(1 - tau z).

    The classical limit tau = 0 is z ln z.  Domains: z >= 0 for tau in
    {0, -1} and 0 <= z <= 1 for tau = +1; the boundary values are the
    continuous limits (h(0) = 0, and h_{+1}(1) = 0).
    """
    z = np.asarray(z, dtype=float)
    if np.any(z < 0.0):
        raise DomainError("entropy integrand requires z >= 0")
    if tau == 0:
        return xlogy(z, z)
    if tau == 1:
        if np.any(z > 1.0):
            raise DomainError("fermion entropy requires z <= 1")
        return xlogy(z, z) + xlogy(1.0 - z, 1.0 - z)
    if tau == -1:
        return xlogy(z, z) - (1.0 + z) * np.log1p(z)
    raise DomainError(f"tau must be one of -1, 0, +1, got {tau}")


def potential_integrand(k, tau):
    """Dual objective density w(K): -K, log(1-K) or -log(1+K) by statistics."""
    k = np.asarray(k, dtype=float)
    if tau == 0:
        return -k
    if tau == 1:
        if np.any(k >= 1.0):
            raise DomainError("fermion potential requires K < 1")
        return np.log1p(-k)
    if tau == -1:
        return -np.log1p(k)
    raise DomainError(f"tau must be one of -1, 0, +1, got {tau}")


def hessian_weight(k, tau):
    """Derivative dK/dx of the equilibrium w.r.t. its exponent, zeta = K (1 - tau K).

    Algebraically identical to K^2 exp(-x) for tau = +-1 and to K for
    tau = 0, but stable for saturated fermion values.
    """
    k = np.asarray(k, dtype=float)
    if tau == 0:
        return +k
    if tau in (1, -1):
        return k * (1.0 - tau * k)
    raise DomainError(f"tau must be one of -1, 0, +1, got {tau}")


def eta_integrals(c, tau):
    """Radial integrals (eta, eta_E) of the normalised equilibrium shell.

    eta_tau(c)   = int 1/(exp(|q|^2 + c) + tau) dq      over R^3,
    eta_E_tau(c) = int |q|^2/(exp(|q|^2 + c) + tau) dq,

    evaluated in spherical coordinates with the cutoff chosen so the
    truncated tail is below 1e-12 relative.  The Bose branch needs c > 0.
    """
    if tau == -1 and c <= 0.0:
        raise DomainError("Bose eta integrals require c > 0")
    if tau not in (-1, 0, 1):
        raise DomainError(f"tau must be one of -1, 0, +1, got {tau}")

    # Integrand ~ r^4 exp(-r^2 - c) for large r; r^2 > -min(c,0) + 45
    # pushes the tail below 1e-12 of the total.
    cutoff = math.sqrt(max(0.0, -c) + 45.0)

    def density(r):
        return 4.0 * math.pi * r * r / (math.exp(r * r + c) + tau)

    def energy(r):
        return r * r * density(r)

    scale = math.exp(-min(c, 0.0))
    eta, _ = quad(density, 0.0, cutoff, epsabs=1e-14 * scale, epsrel=1e-12, limit=300)
    eta_e, _ = quad(energy, 0.0, cutoff, epsabs=1e-14 * scale, epsrel=1e-12, limit=300)
    return eta, eta_e
