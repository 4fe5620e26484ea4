"""Multi-species relaxation operator and its implicit stage update.

Each species relaxes towards its own equilibrium and towards one mixed
equilibrium per partner species,

    R_k(f) = nu_kk (K_kk - f_k) + sum_{j != k} nu_kj (K_kj - f_k),

with symmetric mixed frequencies nu_kj = nu_jk.  The backward-Euler stage
update solves

    psi_k = d_k G_k + d_k gamma_dt (nu_kk K_kk + sum_{j != k} nu_kj K_kj),
    d_k   = 1 / (1 + gamma_dt sum_j nu_kj),

where every equilibrium is fitted to the moments of G, which makes the
update conservative to the accuracy of the moment inversion regardless of
the step size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .equilibrium import GRAD_TOL, equilibrium_field, solve_all_pairs
from .grid import MomentumGrid
from .statistics import ParticleStatistics

__all__ = [
    "Species",
    "CollisionFrequencies",
    "Mixture",
    "stage_denominators",
    "implicit_update",
    "implicit_update_field",
    "collision_rhs",
]


@dataclass(frozen=True)
class Species:
    name: str
    mass: float
    statistics: ParticleStatistics

    def __post_init__(self):
        if self.mass <= 0.0:
            raise DomainError(f"species {self.name!r} has non-positive mass")


class CollisionFrequencies:
    """Square table of relaxation frequencies, symmetric off the diagonal."""

    def __init__(self, table):
        table = np.array(table, dtype=float)
        if table.ndim != 2 or table.shape[0] != table.shape[1]:
            raise DomainError("frequency table must be square")
        if np.any(table < 0.0):
            raise DomainError("frequencies must be non-negative")
        off = table - np.diag(np.diag(table))
        if not np.array_equal(off, off.T):
            raise DomainError("mixed frequencies must satisfy nu_kj = nu_jk")
        self.table = table
        self.row_sums = table.sum(axis=1)

    @property
    def size(self) -> int:
        return self.table.shape[0]

    def __getitem__(self, key) -> float:
        return float(self.table[key])

    def pairs(self):
        """Indices (k, j) with k < j of coupled species."""
        s = self.size
        return [(k, j) for k in range(s) for j in range(k + 1, s)
                if self.table[k, j] > 0.0]


@dataclass(frozen=True)
class Mixture:
    """Species set with their momentum grids and relaxation frequencies."""

    species: tuple
    grids: tuple
    nu: CollisionFrequencies

    def __post_init__(self):
        if not (len(self.species) == len(self.grids) == self.nu.size):
            raise DomainError("species, grids and frequency table disagree")
        for sp, grid in zip(self.species, self.grids):
            if sp.mass != grid.mass:
                raise DomainError(f"grid mass mismatch for {sp.name!r}")

    @property
    def size(self) -> int:
        return len(self.species)

    @property
    def taus(self):
        return tuple(sp.statistics for sp in self.species)

    @property
    def masses(self):
        return tuple(sp.mass for sp in self.species)


def stage_denominators(nu: CollisionFrequencies, gamma_dt: float) -> np.ndarray:
    """d_k = 1 / (1 + gamma_dt sum_j nu_kj)."""
    return 1.0 / (1.0 + gamma_dt * nu.row_sums)


def implicit_update(gs, mixture: Mixture, gamma_dt: float, warm=None,
                    grad_tol: float = GRAD_TOL):
    """Solve one backward-Euler relaxation stage at a single point.

    `gs` holds one flat array per species.  Returns the list of updated
    distributions; `warm`, if given, is a mutable dict of previous
    multipliers used to start the Newton iterations and updated in place.
    """
    if gamma_dt < 0.0:
        raise DomainError("stage size must be non-negative")
    if gamma_dt == 0.0:
        return [np.array(g, dtype=float, copy=True) for g in gs]

    nu = mixture.nu
    d = stage_denominators(nu, gamma_dt)
    intra_coeffs = [d[k] * nu[k, k] for k in range(mixture.size)]
    pair_coeffs = {(k, j): (d[k] * nu[k, j], d[j] * nu[j, k])
                   for k, j in nu.pairs()}
    intra, inter = solve_all_pairs(gs, mixture.grids, mixture.taus,
                                   intra_coeffs, pair_coeffs, warm,
                                   grad_tol=grad_tol)

    psi = []
    for k in range(mixture.size):
        total = np.zeros_like(np.asarray(gs[k], dtype=float))
        if intra[k] is not None:
            total += nu[k, k] * equilibrium_field(
                intra[k], mixture.grids[k], mixture.taus[k])
        for (a, b), alpha in inter.items():
            if k == a:
                total += nu[a, b] * equilibrium_field(
                    alpha.species_alpha(0), mixture.grids[k], mixture.taus[k])
            elif k == b:
                total += nu[b, a] * equilibrium_field(
                    alpha.species_alpha(1), mixture.grids[k], mixture.taus[k])
        psi.append(d[k] * (gs[k] + gamma_dt * total))
    return psi


def implicit_update_field(gs, mixture: Mixture, gamma_dt: float, warm=None,
                          grad_tol: float = GRAD_TOL):
    """Apply the implicit stage update cell by cell.

    `gs` holds one (cells, nodes) array per species; `warm` is a list with
    one multiplier dict per cell, created on first use.
    """
    cells = gs[0].shape[0]
    if warm is None:
        warm = [dict() for _ in range(cells)]
    psi = [np.empty_like(g) for g in gs]
    for i in range(cells):
        updated = implicit_update([g[i] for g in gs], mixture, gamma_dt,
                                  warm[i], grad_tol=grad_tol)
        for k in range(mixture.size):
            psi[k][i] = updated[k]
    return psi, warm


def collision_rhs(fs, mixture: Mixture, warm=None):
    """Instantaneous relaxation rates R_k(f) at a single point.

    Every equilibrium is fitted to the moments of f itself, so the summed
    invariants of the returned rates vanish.
    """
    nu = mixture.nu
    intra_coeffs = [nu[k, k] for k in range(mixture.size)]
    pair_coeffs = {(k, j): (nu[k, j], nu[j, k]) for k, j in nu.pairs()}
    intra, inter = solve_all_pairs(fs, mixture.grids, mixture.taus,
                                   intra_coeffs, pair_coeffs, warm)
    rates = []
    for k in range(mixture.size):
        f = np.asarray(fs[k], dtype=float)
        rate = -nu.row_sums[k] * f
        if intra[k] is not None:
            rate += nu[k, k] * equilibrium_field(
                intra[k], mixture.grids[k], mixture.taus[k])
        for (a, b), alpha in inter.items():
            if k == a:
                rate += nu[a, b] * equilibrium_field(
                    alpha.species_alpha(0), mixture.grids[k], mixture.taus[k])
            elif k == b:
                rate += nu[b, a] * equilibrium_field(
                    alpha.species_alpha(1), mixture.grids[k], mixture.taus[k])
        rates.append(rate)
    return rates
