"""Per-species momentum grids, quadrature and moment functionals.

Each species k gets a fixed uniform tensor grid centred at m_k u_mix with
half-width 6 m_k v_th,k and default spacing 0.25 m_k v_th,k, where
v_th,k = sqrt(T_mix / m_k) is the species thermal velocity of the initial
mixture.  Integrals use tensor-product trapezoidal weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError

__all__ = [
    "MomentumGrid",
    "Moments",
    "build_grid",
    "integrate",
    "moment_table",
    "compute_moments",
    "kinetic_temperature",
    "mixture_velocity",
    "mixture_temperature",
    "maxwellian",
]

EXTENT_THERMAL_WIDTHS = 6.0
DEFAULT_INTERVALS = 48


@dataclass(frozen=True)
class Moments:
    """Density, momentum density and energy density of a distribution."""

    n: float
    momentum: np.ndarray
    energy: float
    mass: float | None = None

    def as_vector(self) -> np.ndarray:
        out = np.empty(5)
        out[0] = self.n
        out[1:4] = self.momentum
        out[4] = self.energy
        return out

    @classmethod
    def from_vector(cls, vec, mass: float | None = None) -> "Moments":
        vec = np.asarray(vec, dtype=float)
        return cls(n=float(vec[0]), momentum=vec[1:4].copy(),
                   energy=float(vec[4]), mass=mass)

    def kinetic_temperature(self) -> float:
        if self.mass is None:
            raise DomainError("moments carry no mass")
        return kinetic_temperature(self, self.mass)


@dataclass(frozen=True)
class MomentumGrid:
    """Uniform tensor grid in momentum space for one species."""

    mass: float
    center: np.ndarray          # grid centre m_k u_mix
    spacing: float
    nodes_per_axis: int
    thermal_velocity: float
    nodes: np.ndarray = field(repr=False)        # (Q, 3)
    weights: np.ndarray = field(repr=False)      # (Q,) trapezoidal
    invariants: np.ndarray = field(repr=False)   # (Q, 5) rows (1, p, |p|^2/2m)
    scale: np.ndarray = field(repr=False)        # per-component solver scales
    scaled_invariants: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    @property
    def cell_volume(self) -> float:
        return self.spacing ** 3

    @property
    def extent(self) -> float:
        """Half-width of each axis around its centre component."""
        return 0.5 * self.spacing * (self.nodes_per_axis - 1)

    @property
    def saturation_density(self) -> float:
        """Quadrature of the constant 1, the fermion capacity of the grid."""
        return float(np.sum(self.weights)) * self.cell_volume

    @property
    def max_speed(self) -> float:
        """Largest |p1|/m over the grid, the transport CFL speed."""
        return float(np.max(np.abs(self.nodes[:, 0]))) / self.mass

    @property
    def momentum_scale(self) -> float:
        return float(self.scale[1])

    @property
    def energy_scale(self) -> float:
        return float(self.scale[4])


def build_grid(mass, mixture_velocity, mixture_temperature,
               intervals=DEFAULT_INTERVALS) -> MomentumGrid:
    """Build the fixed momentum grid for a species of the given mass.

    The extent is always +-6 m v_th; `intervals` subdivides it (48 by
    default, reproducing the 0.25 m v_th spacing).
    """
    if mass <= 0.0:
        raise ConfigurationError("mass must be positive")
    if mixture_temperature <= 0.0:
        raise ConfigurationError("mixture temperature must be positive")
    if intervals < 2 or intervals % 2:
        raise ConfigurationError("grid intervals must be an even number >= 2")

    v_th = math.sqrt(mixture_temperature / mass)
    center = mass * np.asarray(mixture_velocity, dtype=float)
    if center.shape != (3,):
        raise DomainError("mixture velocity must be a 3-vector")
    half_width = EXTENT_THERMAL_WIDTHS * mass * v_th
    spacing = 2.0 * half_width / intervals
    npa = intervals + 1

    offsets = spacing * (np.arange(npa) - intervals // 2)
    axes = [center[r] + offsets for r in range(3)]
    px, py, pz = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([px.ravel(), py.ravel(), pz.ravel()], axis=1)

    w1 = np.ones(npa)
    w1[0] = w1[-1] = 0.5
    wx, wy, wz = np.meshgrid(w1, w1, w1, indexing="ij")
    weights = (wx * wy * wz).ravel()

    invariants = np.empty((nodes.shape[0], 5))
    invariants[:, 0] = 1.0
    invariants[:, 1:4] = nodes
    invariants[:, 4] = np.einsum("qr,qr->q", nodes, nodes) / (2.0 * mass)

    # Per-component scales keep Newton systems well conditioned even when
    # node momenta are numerically large (heavy species, plasma units).
    scale = np.ones(5)
    scale[1:4] = max(np.max(np.abs(nodes)), 1e-300)
    scale[4] = max(np.max(invariants[:, 4]), 1e-300)

    return MomentumGrid(
        mass=float(mass),
        center=center,
        spacing=spacing,
        nodes_per_axis=npa,
        thermal_velocity=v_th,
        nodes=nodes,
        weights=weights,
        invariants=invariants,
        scale=scale,
        scaled_invariants=invariants / scale,
    )


def integrate(values, grid: MomentumGrid):
    """Trapezoidal quadrature of node values over momentum space."""
    return np.asarray(values) @ grid.weights * grid.cell_volume


def moment_table(fields, grid: MomentumGrid) -> np.ndarray:
    """Moment vectors (n, P, E) for an array of distributions (..., Q)."""
    weighted = np.asarray(fields) * grid.weights
    return weighted @ grid.invariants * grid.cell_volume


def compute_moments(f, grid: MomentumGrid) -> Moments:
    return Moments.from_vector(moment_table(f, grid), mass=grid.mass)


def kinetic_temperature(moments: Moments, mass: float) -> float:
    """T = (2/3)(E/n - |P|^2 / (2 m n^2)); equals T for a Maxwellian."""
    if moments.n <= 0.0:
        raise DomainError("kinetic temperature needs positive density")
    p2 = float(moments.momentum @ moments.momentum)
    return (2.0 / 3.0) * (moments.energy / moments.n
                          - p2 / (2.0 * mass * moments.n ** 2))


def mixture_velocity(moments_list, masses) -> np.ndarray:
    """Mass-weighted mean velocity sum P_k / sum m_k n_k of the mixture."""
    p_tot = np.zeros(3)
    n_mass = 0.0
    for mom, mass in zip(moments_list, masses):
        p_tot += mom.momentum
        n_mass += mass * mom.n
    if n_mass <= 0.0:
        raise DomainError("mixture velocity needs positive total mass density")
    return p_tot / n_mass


def mixture_temperature(moments_list, masses) -> float:
    """Mixture temperature including the velocity-difference heating term.

    Computed from the conserved totals,
    T_mix = (2/3) (E_tot - |P_tot|^2 / (2 N_tot)) / n_tot  with
    N_tot = sum m_k n_k, which for two species expands to the
    density-weighted mean of temperatures plus
    (1/3) (N_1 N_2 / N_tot) |U_1 - U_2|^2 / n_tot.
    """
    n_tot = sum(m.n for m in moments_list)
    if n_tot <= 0.0:
        raise DomainError("mixture temperature needs positive total density")
    n_mass = sum(mass * m.n for mass, m in zip(masses, moments_list))
    p_tot = np.zeros(3)
    e_tot = 0.0
    for m in moments_list:
        p_tot += m.momentum
        e_tot += m.energy
    internal = e_tot - float(p_tot @ p_tot) / (2.0 * n_mass)
    t_mix = (2.0 / 3.0) * internal / n_tot
    if t_mix <= 0.0:
        raise DomainError("mixture moments imply non-positive temperature")
    return t_mix


def maxwellian(density, velocity, temperature, grid: MomentumGrid) -> np.ndarray:
    """Sample M[n, U, T] = n/(2 pi T m)^{3/2} exp(-|p - m U|^2/(2 T m))."""
    if density < 0.0 or temperature <= 0.0:
        raise DomainError("Maxwellian needs n >= 0 and T > 0")
    m = grid.mass
    shifted = grid.nodes - m * np.asarray(velocity, dtype=float)
    arg = np.einsum("qr,qr->q", shifted, shifted) / (2.0 * temperature * m)
    norm = density / (2.0 * math.pi * temperature * m) ** 1.5
    return norm * np.exp(-arg)
