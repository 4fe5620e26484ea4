"""Run diagnostics: entropy, temperatures, gaps, and analytic references.

Two temperatures are tracked per species.  The kinetic temperature
T = (2/3)(E/n - |P|^2/(2 n N)) is a plain moment combination; the physical
temperature comes from the fitted equilibrium multipliers, theta = -1/a2.
They agree for classical statistics only.

The analytic reference curves are the closed-form decay of the velocity
gap and the three-term formula for the kinetic-temperature gap, whose
history integral is evaluated by trapezoidal quadrature over the pair
parameters (c12, c21) recorded along the run.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .errors import DiagnosticError, DomainError
from .equilibrium import IntraAlpha, alpha_to_abc, solve_inter, solve_intra
from .grid import Moments, mixture_temperature, moment_table
from .relaxation import Mixture
from .statistics import entropy_integrand, eta_integrals

__all__ = [
    "SpeciesState",
    "DiagnosticsRecord",
    "DiagnosticsCollector",
    "total_entropy",
    "physical_temperature",
    "analytic_velocity_gap",
    "analytic_kinetic_temperature_gap",
    "equilibrium_temperature",
    "spatial_profile",
]

# Distribution values may stray outside the entropy domain by rounding;
# violations beyond this relative tolerance are reported as errors.
DOMAIN_SLACK = 1e-12


def _clamped(f: np.ndarray, tau: int, name: str) -> np.ndarray:
    top = max(float(f.max()), 1.0)
    slack = DOMAIN_SLACK * top
    low = float(f.min())
    if low < -slack:
        cell, node = np.unravel_index(int(np.argmin(f)), f.shape)
        raise DiagnosticError(
            f"{name}: f = {low:.6e} < 0 at cell {cell}, node {node}")
    if tau == 1:
        high = float(f.max())
        if high > 1.0 + slack:
            cell, node = np.unravel_index(int(np.argmax(f)), f.shape)
            raise DiagnosticError(
                f"{name}: fermion f = {high:.6e} > 1 at cell {cell}, "
                f"node {node}")
        return np.clip(f, 0.0, 1.0)
    return np.maximum(f, 0.0)


def total_entropy(fs, mixture: Mixture, dx: float = 1.0) -> float:
    """Entropy H summed over species, cells, and momentum nodes."""
    total = 0.0
    for f, grid, tau, sp in zip(fs, mixture.grids, mixture.taus,
                                mixture.species):
        z = _clamped(np.atleast_2d(f), tau, sp.name)
        h = entropy_integrand(z, tau)
        total += float(np.sum(h @ grid.weights)) * grid.cell_volume * dx
    return total


def physical_temperature(alpha: IntraAlpha) -> float:
    """theta = -1/a2 of a fitted equilibrium."""
    if alpha.is_vacuum or alpha.a2 >= 0.0:
        raise DomainError("no temperature for this multiplier vector")
    return -1.0 / alpha.a2


def equilibrium_temperature(moments, masses) -> float:
    """Common temperature a classical mixture relaxes to, from initial
    moments (density-weighted mean plus the velocity-spread term)."""
    return mixture_temperature(moments, masses)


def analytic_velocity_gap(t, moments0, nu) -> np.ndarray:
    """Closed-form velocity gap U1(t) - U2(t) for a homogeneous pair.

    `moments0` holds the two initial Moments; the decay rate is
    (nu12 N2 + nu21 N1)/(N1 + N2).  `t` may be an array.
    """
    m1, m2 = moments0
    if m1.mass is None:
        raise DomainError("moments must carry masses")
    n_big = (m1.mass * m1.n, m2.mass * m2.n)
    rate = (nu[0, 1] * n_big[1] + nu[1, 0] * n_big[0]) / sum(n_big)
    gap0 = m1.momentum / n_big[0] - m2.momentum / n_big[1]
    decay = np.exp(-rate * np.asarray(t, dtype=float))
    return np.multiply.outer(decay, gap0)


def analytic_kinetic_temperature_gap(t, moments0, nu, c_history, taus):
    """Three-term reference for the kinetic-temperature gap, unscaled.

    Returns (E1/n1 - |P1|^2/(2 n1 N1)) - (E2/n2 - |P2|^2/(2 n2 N2)) at
    time `t`; multiply by 2/3 for the temperature convention.  The history
    integral runs over `c_history`, a sequence of (s, c12, c21) rows that
    must cover [0, t]; its integrand needs the statistics pair `taus`.
    Requires symmetric mixed frequencies, nu12 = nu21.
    """
    m1, m2 = moments0
    nu_t = nu[0, 1]
    if nu_t != nu[1, 0]:
        raise DomainError("the closed form needs nu12 = nu21")
    n_big = (m1.mass * m1.n, m2.mass * m2.n)
    lam0 = (m1.energy / m1.n - 0.5 * float(m1.momentum @ m1.momentum)
            / (m1.n * n_big[0])) \
        - (m2.energy / m2.n - 0.5 * float(m2.momentum @ m2.momentum)
           / (m2.n * n_big[1]))
    gap_u0 = m1.momentum / n_big[0] - m2.momentum / n_big[1]

    decay = np.exp(-nu_t * t)
    first = decay * lam0
    second = 0.5 * m1.mass * m2.mass \
        * (m2.n * n_big[1] - m1.n * n_big[0]) / sum(n_big) ** 2 \
        * decay * (1.0 - decay) * float(gap_u0 @ gap_u0)

    if t == 0.0:
        return first + second

    history = np.asarray(c_history, dtype=float)
    if history.ndim != 2 or history.shape[1] != 3 or history.shape[0] < 2 \
            or history[0, 0] > 1e-12 or history[-1, 0] < t * (1.0 - 1e-9):
        raise DiagnosticError("c history must cover [0, t]")
    keep = history[:, 0] <= t * (1.0 + 1e-9)
    s, c12, c21 = history[keep].T

    w1 = m1.mass ** 1.5 * np.array([eta_integrals(c, taus[0])[1]
                                    for c in c12])
    w2 = m2.mass ** 1.5 * np.array([eta_integrals(c, taus[1])[1]
                                    for c in c21])
    integrand = (w1 / m1.n - w2 / m2.n) / (w1 + w2)

    e_total = m1.energy + m2.energy
    p_total = m1.momentum + m2.momentum
    coeff = e_total - 0.5 * float(p_total @ p_total) / sum(n_big)
    # exp(-nu (t - s)) keeps the weights bounded for long horizons.
    duhamel = nu_t * coeff * trapezoid(
        np.exp(nu_t * (s - t)) * integrand, s)
    return first + second + duhamel


@dataclass(frozen=True)
class SpeciesState:
    n: float
    momentum: np.ndarray
    energy: float
    velocity: np.ndarray
    kinetic_temperature: float
    physical_temperature: float


@dataclass(frozen=True)
class DiagnosticsRecord:
    time: float
    species: tuple
    total_momentum: np.ndarray
    total_energy: float
    entropy: float
    dissipation: float
    pair_c: dict

    def velocity_gap(self, k: int = 0, j: int = 1) -> float:
        return float(np.linalg.norm(self.species[k].velocity
                                    - self.species[j].velocity))

    def kinetic_temperature_gap(self, k: int = 0, j: int = 1) -> float:
        return self.species[k].kinetic_temperature \
            - self.species[j].kinetic_temperature

    def physical_temperature_gap(self, k: int = 0, j: int = 1) -> float:
        return self.species[k].physical_temperature \
            - self.species[j].physical_temperature


class DiagnosticsCollector:
    """Observer that assembles a DiagnosticsRecord per recorded state.

    Physical temperatures come from intra-species fits of the current
    domain totals; the pair parameters (c12, c21) from coupled fits with
    the mixed frequencies as weights.  Fits reuse the previous record's
    multipliers as Newton starts.
    """

    def __init__(self, mixture: Mixture, dx: float = 1.0,
                 pair_fits: bool = True):
        self.mixture = mixture
        self.dx = dx
        self.pair_fits = pair_fits
        self.records = []
        self._warm = {}

    def __call__(self, t: float, fs) -> DiagnosticsRecord:
        mix = self.mixture
        states = []
        intra_alphas = []
        for k, (f, grid) in enumerate(zip(fs, mix.grids)):
            mom5 = moment_table(np.atleast_2d(f), grid).sum(axis=0) * self.dx
            alpha, _ = solve_intra(mom5, grid, mix.taus[k],
                                   warm_start=self._warm.get(("intra", k)))
            self._warm[("intra", k)] = alpha
            intra_alphas.append(alpha)
            m = Moments.from_vector(mom5, mass=grid.mass)
            states.append(SpeciesState(
                n=m.n, momentum=m.momentum, energy=m.energy,
                velocity=m.momentum / (grid.mass * m.n),
                kinetic_temperature=m.kinetic_temperature(),
                physical_temperature=physical_temperature(alpha)))

        pair_c = {}
        if self.pair_fits:
            for k, j in mix.nu.pairs():
                coeffs = (mix.nu[k, j], mix.nu[j, k])
                targets = np.empty(6)
                targets[0] = coeffs[0] * states[k].n
                targets[1] = coeffs[1] * states[j].n
                targets[2:5] = coeffs[0] * states[k].momentum \
                    + coeffs[1] * states[j].momentum
                targets[5] = coeffs[0] * states[k].energy \
                    + coeffs[1] * states[j].energy
                alpha, _ = solve_inter(
                    targets, (mix.grids[k], mix.grids[j]),
                    (mix.taus[k], mix.taus[j]), coeffs,
                    warm_start=self._warm.get(("inter", k, j)))
                self._warm[("inter", k, j)] = alpha
                c_kj = alpha_to_abc(alpha.species_alpha(0), mix.masses[k])[2]
                c_jk = alpha_to_abc(alpha.species_alpha(1), mix.masses[j])[2]
                pair_c[(k, j)] = (c_kj, c_jk)

        entropy = total_entropy(fs, mix, self.dx)
        if self.records:
            dissipation = self.records[-1].entropy - entropy
        else:
            dissipation = 0.0

        record = DiagnosticsRecord(
            time=t,
            species=tuple(states),
            total_momentum=sum(s.momentum for s in states),
            total_energy=sum(s.energy for s in states),
            entropy=entropy,
            dissipation=dissipation,
            pair_c=pair_c)
        self.records.append(record)
        return record

    def c_history(self, k: int = 0, j: int = 1) -> np.ndarray:
        """(time, c_kj, c_jk) rows over all records, for the Duhamel term."""
        rows = [(r.time, *r.pair_c[(k, j)]) for r in self.records
                if (k, j) in r.pair_c]
        if not rows:
            raise DiagnosticError(f"no pair history for ({k}, {j})")
        return np.array(rows)


def spatial_profile(fs, mixture: Mixture) -> np.ndarray:
    """Per-cell (n, Ux, T_kin, theta) for every species, one row per cell.

    Column 4k..4k+3 holds species k.  The physical temperature theta comes
    from an intra-species fit of each cell's moments; neighbouring cells
    warm-start each other.
    """
    cells = np.atleast_2d(fs[0]).shape[0]
    out = np.empty((cells, 4 * mixture.size))
    for k, grid in enumerate(mixture.grids):
        table = moment_table(np.atleast_2d(fs[k]), grid)
        warm = None
        for i in range(cells):
            m = Moments.from_vector(table[i], mass=grid.mass)
            warm, _ = solve_intra(table[i], grid, mixture.taus[k],
                                  warm_start=warm)
            out[i, 4 * k] = m.n
            out[i, 4 * k + 1] = m.momentum[0] / (m.n * grid.mass)
            out[i, 4 * k + 2] = m.kinetic_temperature()
            out[i, 4 * k + 3] = physical_temperature(warm)
    return out
