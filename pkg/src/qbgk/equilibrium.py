"""Moment inversion: entropy-minimising equilibria from quadrature targets.

The intra-species problem finds alpha = (a0, a1, a2) in R^5 such that the
discrete moments of K(alpha) = 1/(exp(-alpha . P(p)) + tau) match a target
vector.  The inter-species problem couples two species through shared
momentum and energy multipliers, giving six unknowns
(a0_kj, a0_jk, a1, a2).  Both reduce to strictly convex dual minimisations
solved by a damped Newton iteration with feasibility safeguards for the
Bose branch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve

from .errors import DomainError, FeasibilityError, SaturationError, SolverError
from .grid import Moments, MomentumGrid, kinetic_temperature, moment_table
from .statistics import ParticleStatistics, eval_equilibrium, hessian_weight

__all__ = [
    "IntraAlpha",
    "InterAlpha",
    "GRAD_TOL",
    "SATURATION_FRACTION",
    "alpha_to_abc",
    "abc_to_alpha",
    "classical_fit",
    "equilibrium_field",
    "assemble_targets_intra",
    "assemble_targets_inter",
    "newton_minimize",
    "solve_intra",
    "solve_inter",
    "solve_all_pairs",
]

GRAD_TOL = 1e-11
MAX_ITER = 50
MAX_HALVINGS = 60
SATURATION_FRACTION = 0.999

# Classical exponents above this overflow exp(); treated as infeasible.
_EXP_CAP = 700.0


@dataclass(frozen=True)
class IntraAlpha:
    """Multipliers of one equilibrium: exponent a0 + a1 . p + a2 |p|^2/(2m)."""

    a0: float
    a1: np.ndarray
    a2: float

    def as_vector(self) -> np.ndarray:
        out = np.empty(5)
        out[0] = self.a0
        out[1:4] = self.a1
        out[4] = self.a2
        return out

    @classmethod
    def from_vector(cls, vec) -> "IntraAlpha":
        vec = np.asarray(vec, dtype=float)
        return cls(a0=float(vec[0]), a1=vec[1:4].copy(), a2=float(vec[4]))

    @classmethod
    def vacuum(cls) -> "IntraAlpha":
        return cls(a0=-math.inf, a1=np.zeros(3), a2=-1.0)

    @property
    def is_vacuum(self) -> bool:
        return self.a0 == -math.inf


@dataclass(frozen=True)
class InterAlpha:
    """Multipliers of an equilibrium pair with shared momentum and energy.

    `a0` holds the two species-specific density multipliers in pair order.
    """

    a0: np.ndarray
    a1: np.ndarray
    a2: float

    def species_alpha(self, which: int) -> IntraAlpha:
        return IntraAlpha(a0=float(self.a0[which]), a1=self.a1.copy(), a2=self.a2)

    def as_vector(self) -> np.ndarray:
        out = np.empty(6)
        out[0:2] = self.a0
        out[2:5] = self.a1
        out[5] = self.a2
        return out

    @classmethod
    def from_vector(cls, vec) -> "InterAlpha":
        vec = np.asarray(vec, dtype=float)
        return cls(a0=vec[0:2].copy(), a1=vec[2:5].copy(), a2=float(vec[5]))


def alpha_to_abc(alpha: IntraAlpha, mass: float):
    """Convert multipliers to the (a, b, c) form with exponent
    m a |p/m - b|^2 + c; the physical temperature is 1/(2a)."""
    a = -0.5 * alpha.a2
    if a <= 0.0:
        raise DomainError("alpha has non-negative quadratic coefficient")
    b = -alpha.a1 / alpha.a2
    c = -alpha.a0 + mass * float(alpha.a1 @ alpha.a1) / (2.0 * alpha.a2)
    return a, b, c


def abc_to_alpha(a: float, b, c: float, mass: float) -> IntraAlpha:
    if a <= 0.0:
        raise DomainError("coefficient a must be positive")
    b = np.asarray(b, dtype=float)
    return IntraAlpha(
        a0=-a * mass * float(b @ b) - c,
        a1=2.0 * a * b,
        a2=-2.0 * a,
    )


def classical_fit(moments: Moments, mass: float) -> IntraAlpha:
    """Closed-form Maxwellian multipliers matching (n, P, E) exactly
    in the continuum."""
    if moments.n <= 0.0:
        raise DomainError("classical fit needs positive density")
    temperature = kinetic_temperature(moments, mass)
    if temperature <= 0.0:
        raise DomainError("moments imply non-positive temperature")
    velocity = moments.momentum / (mass * moments.n)
    a = 0.5 / temperature
    c = math.log((2.0 * math.pi * temperature * mass) ** 1.5 / moments.n)
    return abc_to_alpha(a, velocity, c, mass)


def equilibrium_field(alpha: IntraAlpha, grid: MomentumGrid, tau: int) -> np.ndarray:
    """Evaluate the equilibrium on a grid (zeros for the vacuum state)."""
    if alpha.is_vacuum:
        return np.zeros(grid.size)
    return eval_equilibrium(grid.invariants @ alpha.as_vector(), tau)


def assemble_targets_intra(g, grid: MomentumGrid, coeff: float) -> np.ndarray:
    """Intra-species target vector coeff * discrete moments of G."""
    return coeff * moment_table(g, grid)


def assemble_targets_inter(g1, g2, grid1: MomentumGrid, grid2: MomentumGrid,
                           coeff1: float, coeff2: float) -> np.ndarray:
    """Inter-species 6-vector: per-species densities plus the
    coefficient-weighted sums of momentum and energy."""
    m1 = coeff1 * moment_table(g1, grid1)
    m2 = coeff2 * moment_table(g2, grid2)
    out = np.empty(6)
    out[0] = m1[0]
    out[1] = m2[0]
    out[2:6] = m1[1:5] + m2[1:5]
    return out


def _neg_w(exponent, tau):
    """-w(K) expressed through the exponent; stable for saturated values."""
    if tau == 0:
        return np.exp(exponent)
    if tau == 1:
        return np.logaddexp(0.0, exponent)
    # Bose branch, exponent < 0: log(1 + K) = -log(1 - e^x).
    return -np.log(-np.expm1(exponent))


class IntraPotential:
    """Strictly convex dual objective of the intra-species inversion,
    expressed in grid-scaled multipliers."""

    def __init__(self, grid: MomentumGrid, tau: int, targets: np.ndarray):
        self.tau = tau
        self.pmat = grid.scaled_invariants
        self.quad = grid.weights * grid.cell_volume
        self.mu = targets / grid.scale
        self.tolerance_scale = np.full(5, abs(targets[0]))

    def value(self, avec) -> float:
        x = self.pmat @ avec
        xmax = float(np.max(x))
        if self.tau == 0 and xmax > _EXP_CAP:
            return math.inf
        if self.tau == -1 and xmax >= 0.0:
            return math.inf
        total = float(self.quad @ _neg_w(x, self.tau))
        if not math.isfinite(total):
            return math.inf
        return total - float(self.mu @ avec)

    def grad_hess(self, avec):
        x = self.pmat @ avec
        k = eval_equilibrium(x, self.tau)
        zeta = hessian_weight(k, self.tau)
        grad = (self.quad * k) @ self.pmat - self.mu
        hess = self.pmat.T @ (self.pmat * (self.quad * zeta)[:, None])
        return grad, hess


class InterPotential:
    """Dual objective of the coupled pair inversion in 6 scaled multipliers
    (a0_kj, a0_jk, shared a1, shared a2), normalised by the first
    coefficient."""

    _IDX = (np.array([0, 2, 3, 4, 5]), np.array([1, 2, 3, 4, 5]))

    def __init__(self, grids, taus, targets, weight2: float):
        self.grids = grids
        self.taus = taus
        self.weights = (1.0, weight2)
        # Shared multiplier scales: the larger of the two species scales.
        self.scale = np.ones(6)
        self.scale[2:5] = max(g.momentum_scale for g in grids)
        self.scale[5] = max(g.energy_scale for g in grids)
        # Species-scaled 5-parameters are avec[idx] * conv.
        self.conv = []
        for i, g in enumerate(grids):
            self.conv.append(g.scale / self.scale[self._IDX[i]])
        self.mu = targets / np.concatenate(([1.0, 1.0], self.scale[2:6]))
        dens = (abs(targets[0]), abs(targets[1]))
        shared = dens[0] + dens[1]
        self.tolerance_scale = np.array(
            [dens[0], dens[1], shared, shared, shared, shared])

    def _species_exponent(self, which, avec):
        lam = avec[self._IDX[which]] * self.conv[which]
        return self.grids[which].scaled_invariants @ lam

    def value(self, avec) -> float:
        total = 0.0
        for i in (0, 1):
            x = self._species_exponent(i, avec)
            xmax = float(np.max(x))
            if self.taus[i] == 0 and xmax > _EXP_CAP:
                return math.inf
            if self.taus[i] == -1 and xmax >= 0.0:
                return math.inf
            g = self.grids[i]
            part = float((g.weights * g.cell_volume) @ _neg_w(x, self.taus[i]))
            if not math.isfinite(part):
                return math.inf
            total += self.weights[i] * part
        return total - float(self.mu @ avec)

    def grad_hess(self, avec):
        grad = -self.mu.copy()
        hess = np.zeros((6, 6))
        for i in (0, 1):
            g = self.grids[i]
            x = self._species_exponent(i, avec)
            k = eval_equilibrium(x, self.taus[i])
            zeta = hessian_weight(k, self.taus[i])
            quad = g.weights * g.cell_volume
            m5 = (quad * k) @ g.scaled_invariants
            h5 = g.scaled_invariants.T @ (g.scaled_invariants
                                          * (quad * zeta)[:, None])
            conv = self.conv[i]
            idx = self._IDX[i]
            grad[idx] += self.weights[i] * conv * m5
            hess[np.ix_(idx, idx)] += self.weights[i] * np.outer(conv, conv) * h5
        return grad, hess


def newton_minimize(potential, start, grad_tol=GRAD_TOL, max_iter=MAX_ITER,
                    max_halvings=MAX_HALVINGS):
    """Damped Newton minimisation of a convex potential.

    Steps are halved until the iterate is feasible and the potential does
    not increase.  Once the scaled gradient is below `grad_tol` the
    iteration keeps polishing with plain Newton steps while they still
    shrink the residual, so conservation-critical solves end near machine
    precision.  Returns (solution vector, iteration count).
    """
    alpha = np.array(start, dtype=float)
    phi = potential.value(alpha)
    if not math.isfinite(phi):
        raise FeasibilityError("infeasible Newton start")
    tol_scale = potential.tolerance_scale
    floor = max(5e-15, 1e-4 * grad_tol)

    def residual(g):
        return float(np.max(np.abs(g) / tol_scale))

    grad, hess = potential.grad_hess(alpha)
    res = residual(grad)
    iterations = 0
    while res > floor and iterations < max_iter:
        try:
            low = np.linalg.cholesky(hess)
        except np.linalg.LinAlgError as exc:
            raise SolverError(
                f"Hessian not positive definite: {exc}", residual=res) from exc
        step = -cho_solve((low, True), grad)

        if res <= grad_tol:
            # Polishing regime: accept only residual improvements.
            cand = alpha + step
            if not math.isfinite(potential.value(cand)):
                break
            grad_c, hess_c = potential.grad_hess(cand)
            res_c = residual(grad_c)
            if res_c >= res:
                break
            alpha, grad, hess, res = cand, grad_c, hess_c, res_c
            iterations += 1
            continue

        scale_t = 1.0
        halvings = 0
        while True:
            cand = alpha + scale_t * step
            phi_c = potential.value(cand)
            if math.isfinite(phi_c) and phi_c <= phi + 1e-13 * max(1.0, abs(phi)):
                break
            halvings += 1
            if halvings > max_halvings:
                raise FeasibilityError(
                    f"Newton step rejected after {max_halvings} halvings "
                    f"(residual {res:.3e})")
            scale_t *= 0.5
        alpha, phi = cand, phi_c
        grad, hess = potential.grad_hess(alpha)
        res = residual(grad)
        iterations += 1

    if res > grad_tol:
        raise SolverError(
            f"Newton did not converge within {max_iter} iterations "
            f"(residual {res:.3e}, tol {grad_tol:.1e})", residual=res)
    return alpha, iterations


def _bose_feasible(alpha: IntraAlpha, grid: MomentumGrid) -> IntraAlpha:
    """Shift the density multiplier so every exponent is strictly negative."""
    xmax = float(np.max(grid.invariants @ alpha.as_vector()))
    if xmax < -1e-12:
        return alpha
    return IntraAlpha(a0=alpha.a0 - xmax - 0.05, a1=alpha.a1, a2=alpha.a2)


def _check_realizable(mhat, mass):
    n = mhat[0]
    if n < 0.0:
        raise DomainError("target density is negative")
    if n == 0.0:
        return 0.0
    internal = mhat[4] - float(mhat[1:4] @ mhat[1:4]) / (2.0 * mass * n)
    if internal <= 0.0:
        raise DomainError("targets imply non-positive internal energy")
    return n


def solve_intra(targets, grid: MomentumGrid, tau: int, coeff: float = 1.0,
                warm_start: IntraAlpha | None = None,
                grad_tol: float = GRAD_TOL, max_iter: int = MAX_ITER):
    """Invert discrete moments for one species.

    `targets` is coeff times the desired moment vector; the result is
    independent of coeff.  Returns (IntraAlpha, newton iterations);
    zero-density targets yield the vacuum state without solving.
    """
    if coeff <= 0.0:
        raise DomainError("coefficient must be positive")
    mhat = np.asarray(targets, dtype=float) / coeff
    n = _check_realizable(mhat, grid.mass)
    if n == 0.0:
        return IntraAlpha.vacuum(), 0
    if tau == ParticleStatistics.FERMION and \
            n >= SATURATION_FRACTION * grid.saturation_density:
        raise SaturationError(
            f"target density {n:.6g} saturates the momentum grid "
            f"(capacity {grid.saturation_density:.6g})")

    start = warm_start or classical_fit(Moments.from_vector(mhat), grid.mass)
    if tau == ParticleStatistics.BOSON:
        start = _bose_feasible(start, grid)

    potential = IntraPotential(grid, tau, mhat)
    avec, iterations = newton_minimize(
        potential, start.as_vector() * grid.scale, grad_tol, max_iter)
    return IntraAlpha.from_vector(avec / grid.scale), iterations


def _inter_classical_start(mu_hat, weight2, grids):
    n1, n2 = mu_hat[0], mu_hat[1] / weight2
    mass_dens = grids[0].mass * n1 + weight2 * grids[1].mass * n2
    b = mu_hat[2:5] / mass_dens
    theta = (2.0 * mu_hat[5] - float(b @ b) * mass_dens) \
        / (3.0 * (n1 + weight2 * n2))
    if theta <= 0.0:
        raise DomainError("inter targets imply non-positive temperature")
    a = 0.5 / theta
    a0 = []
    for g, dens in zip(grids, (n1, n2)):
        c = math.log((2.0 * math.pi * theta * g.mass) ** 1.5 / dens)
        a0.append(-a * g.mass * float(b @ b) - c)
    return InterAlpha(a0=np.array(a0), a1=2.0 * a * b, a2=-2.0 * a)


def solve_inter(targets, grids, taus, coeffs,
                warm_start: InterAlpha | None = None,
                grad_tol: float = GRAD_TOL, max_iter: int = MAX_ITER):
    """Invert the coupled pair constraints for two species.

    `targets` holds (c1 n1, c2 n2, c1 P1 + c2 P2, c1 E1 + c2 E2) with
    coefficients `coeffs`; momentum and energy multipliers are shared.
    Returns (InterAlpha, newton iterations).
    """
    c1, c2 = coeffs
    if c1 <= 0.0 or c2 <= 0.0:
        raise DomainError("inter coefficients must be positive")
    targets = np.asarray(targets, dtype=float)
    mu_hat = targets / c1
    weight2 = c2 / c1
    dens = (mu_hat[0], mu_hat[1] / weight2)
    if dens[0] == 0.0 and dens[1] == 0.0:
        return InterAlpha(a0=np.array([-math.inf, -math.inf]),
                          a1=np.zeros(3), a2=-1.0), 0
    for d, g, tau in zip(dens, grids, taus):
        if d <= 0.0:
            raise DomainError("inter solve needs positive densities")
        if tau == ParticleStatistics.FERMION and \
                d >= SATURATION_FRACTION * g.saturation_density:
            raise SaturationError(
                f"target density {d:.6g} saturates the momentum grid")

    start = warm_start or _inter_classical_start(mu_hat, weight2, grids)
    if ParticleStatistics.BOSON in taus:
        a0 = start.a0.copy()
        for i in (0, 1):
            if taus[i] == ParticleStatistics.BOSON:
                shifted = _bose_feasible(start.species_alpha(i), grids[i])
                a0[i] = shifted.a0
        start = InterAlpha(a0=a0, a1=start.a1, a2=start.a2)

    potential = InterPotential(grids, taus, mu_hat, weight2)
    avec, iterations = newton_minimize(
        potential, start.as_vector() * potential.scale, grad_tol, max_iter)
    return InterAlpha.from_vector(avec / potential.scale), iterations


def solve_all_pairs(gs, grids, taus, intra_coeffs, pair_coeffs,
                    warm=None, grad_tol: float = GRAD_TOL):
    """Solve every intra equilibrium and every coupled pair of a mixture.

    `intra_coeffs[k]` scales species k's own relaxation (zero skips the
    solve); `pair_coeffs` maps (k, j) with k < j to the two coefficients
    of the coupled solve.  `warm` is an optional mutable dict of previous
    multipliers, updated in place.  Returns (intra list, pair dict).
    """
    warm = warm if warm is not None else {}
    intra = []
    for k, (g, grid, tau, coeff) in enumerate(zip(gs, grids, taus, intra_coeffs)):
        if coeff == 0.0:
            intra.append(None)
            continue
        targets = assemble_targets_intra(g, grid, coeff)
        alpha, _ = solve_intra(targets, grid, tau, coeff,
                               warm_start=warm.get(("intra", k)),
                               grad_tol=grad_tol)
        warm[("intra", k)] = alpha
        intra.append(alpha)

    inter = {}
    for (k, j), (ckj, cjk) in pair_coeffs.items():
        if ckj == 0.0 and cjk == 0.0:
            continue
        targets = assemble_targets_inter(gs[k], gs[j], grids[k], grids[j],
                                         ckj, cjk)
        alpha, _ = solve_inter(targets, (grids[k], grids[j]),
                               (taus[k], taus[j]), (ckj, cjk),
                               warm_start=warm.get(("inter", k, j)),
                               grad_tol=grad_tol)
        warm[("inter", k, j)] = alpha
        inter[(k, j)] = alpha
    return intra, inter
