"""Built-in scenario presets and construction of runnable setups.

Presets
-------
``relaxation:XY``
    Homogeneous two-species relaxation with X, Y in {f, b, c} selecting
    fermion, boson or classical statistics per species.
``sfe-classical`` / ``sfe-fermion``
    Homogeneous sulfur/fluorine/electron plasma relaxation in internal
    units (mass in electron masses, energy in eV, time in fs), with the
    electrons treated classically or as fermions.
``sod``
    Two identical fermion species forming a Riemann problem in the fluid
    regime on x in [-0.5, 0.5].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .config import SimConfig, SpeciesConfig
from .equilibrium import SATURATION_FRACTION
from .errors import ConfigurationError
from .grid import MomentumGrid, build_grid, maxwellian
from .relaxation import CollisionFrequencies, Mixture, Species
from .statistics import ParticleStatistics, eta_integrals
from .transport import SpatialDomain

__all__ = ["scenario_preset", "scenario_names", "fermi_state",
           "RunSetup", "build_setup",
           "ATOMIC_MASS_UNIT", "SULFUR_MASS", "FLUORINE_MASS",
           "FERMI_SCALE", "electron_density"]

# Internal plasma units: electron masses, eV, fs.  The atomic mass unit in
# electron masses follows from u = 1.6605e-24 g and m_e = 9.11e-28 g.
ATOMIC_MASS_UNIT = 1.6605e-24 / 9.11e-28
SULFUR_MASS = 32.07 * ATOMIC_MASS_UNIT - 11.0
FLUORINE_MASS = 19.0 * ATOMIC_MASS_UNIT - 7.0
ELECTRON_THETA = 100.0
ION_TEMPERATURE = 15.0
PLASMA_FREQUENCY = 0.00753

# Fugacity scale of the electron Fermi-Dirac initialisation.  The electron
# density is then fixed by requiring that the initialisation integrates to
# exactly that density, which pins the unit of number density.
FERMI_SCALE = 1.061711634


@lru_cache(maxsize=1)
def electron_density() -> float:
    """Electron density (internal units) consistent with FERMI_SCALE.

    Solves -Li_{3/2}(-z) = z / FERMI_SCALE for the fugacity z, so that
    fermi_state(n_e, 0, ELECTRON_THETA, FERMI_SCALE) has density n_e.
    """
    def gap(z: float) -> float:
        eta, _ = eta_integrals(-math.log(z), 1)
        return eta / math.pi ** 1.5 - z / FERMI_SCALE

    fugacity = brentq(gap, 1e-8, 1.0, xtol=1e-15, rtol=8.9e-16)
    return (fugacity * (2.0 * math.pi * ELECTRON_THETA) ** 1.5
            / FERMI_SCALE)


def fermi_state(density, velocity, theta, scale,
                grid: MomentumGrid) -> np.ndarray:
    """Fermi-Dirac field [ (2 pi m theta)^{3/2} / (scale n) e^{x} + 1 ]^{-1}
    with x = |p - m U|^2 / (2 m theta), sampled on the grid nodes."""
    mass = grid.mass
    rel = grid.nodes - mass * np.asarray(velocity, dtype=float)
    exponent = np.einsum("ij,ij->i", rel, rel) / (2.0 * mass * theta)
    prefactor = (2.0 * math.pi * mass * theta) ** 1.5 / (scale * density)
    return 1.0 / (prefactor * np.exp(exponent) + 1.0)


def _fermi_kinetic_temperature(density, theta, scale, mass) -> float:
    """Kinetic temperature of the sampled Fermi-Dirac state (analytic)."""
    fugacity = scale * density / (2.0 * math.pi * mass * theta) ** 1.5
    eta, eta_e = eta_integrals(-math.log(fugacity), 1)
    return (2.0 / 3.0) * theta * eta_e / eta


def _relaxation_preset(pairing: str) -> SimConfig:
    if len(pairing) != 2 or any(ch not in "fbc" for ch in pairing):
        raise ConfigurationError(
            f"unknown relaxation pairing {pairing!r}; use two of f, b, c")
    stats = tuple(ParticleStatistics.parse(ch) for ch in pairing)
    species = (
        SpeciesConfig(name="1", mass=1.0, statistics=stats[0],
                      density=1.0, velocity=(0.5, 0.0, 0.0),
                      temperature=1.0),
        SpeciesConfig(name="2", mass=1.5, statistics=stats[1],
                      density=1.2, velocity=(0.1, 0.0, 0.0),
                      temperature=0.5),
    )
    return SimConfig(
        scenario=f"relaxation:{pairing}", species=species,
        frequencies=((1.0, 1.0), (1.0, 1.0)),
        dt=0.01, t_end=5.0, scheme_order=1, stride=1,
        output_dir="out", units="dimensionless")


def _sfe_preset(fermionic: bool) -> SimConfig:
    n_e = electron_density()
    if fermionic:
        electron = SpeciesConfig(
            name="e", mass=1.0, statistics=ParticleStatistics.FERMION,
            density=n_e, velocity=(0.0, 0.0, 0.0),
            temperature=ELECTRON_THETA, init="fermi", scale=FERMI_SCALE)
    else:
        electron = SpeciesConfig(
            name="e", mass=1.0, statistics=ParticleStatistics.CLASSICAL,
            density=n_e, velocity=(0.0, 0.0, 0.0),
            temperature=ELECTRON_THETA)
    ions = ParticleStatistics.CLASSICAL
    species = (
        SpeciesConfig(name="S", mass=SULFUR_MASS, statistics=ions,
                      density=n_e / 53.0, velocity=(0.0, 0.0, 0.0),
                      temperature=ION_TEMPERATURE),
        SpeciesConfig(name="F", mass=FLUORINE_MASS, statistics=ions,
                      density=6.0 * n_e / 53.0, velocity=(0.0, 0.0, 0.0),
                      temperature=ION_TEMPERATURE),
        electron,
    )
    nu = tuple(tuple(PLASMA_FREQUENCY for _ in range(3)) for _ in range(3))
    name = "sfe-fermion" if fermionic else "sfe-classical"
    return SimConfig(
        scenario=name, species=species, frequencies=nu,
        dt=0.1, t_end=1500.0, scheme_order=2, stride=10,
        output_dir="out", units="me-eV-fs")


def _sod_preset() -> SimConfig:
    fermion = ParticleStatistics.FERMION
    species = tuple(
        SpeciesConfig(name=str(k + 1), mass=1.0, statistics=fermion,
                      density=1.0, velocity=(0.0, 0.0, 0.0),
                      temperature=1.0, density2=0.125, temperature2=0.8)
        for k in range(2))
    domain = SpatialDomain(-0.5, 0.5, 300, "copy")
    # Left/right average totals give the mixture temperature the grids are
    # centred on; dt sits at 90% of the second-order flux CFL bound.
    t_mix = 44.0 / 45.0
    grid = build_grid(1.0, np.zeros(3), t_mix, intervals=4)
    dt = 0.9 * (2.0 / 3.0) * domain.dx / grid.max_speed
    return SimConfig(
        scenario="sod", species=species,
        frequencies=((2e4, 2e4), (2e4, 2e4)),
        dt=dt, t_end=0.055, scheme_order=2, flux_order=2,
        domain=domain, split=0.0, stride=10,
        output_dir="out", units="dimensionless")


def scenario_names() -> tuple[str, ...]:
    pairs = ("ff", "bb", "fb", "fc", "cb", "cc")
    return tuple(f"relaxation:{p}" for p in pairs) + (
        "sfe-classical", "sfe-fermion", "sod")


def scenario_preset(name: str) -> SimConfig:
    """Return the named preset configuration."""
    key = name.strip().lower()
    if key.startswith("relaxation:"):
        return _relaxation_preset(key.split(":", 1)[1]).validate()
    if key == "sfe-classical":
        return _sfe_preset(fermionic=False).validate()
    if key == "sfe-fermion":
        return _sfe_preset(fermionic=True).validate()
    if key == "sod":
        return _sod_preset().validate()
    raise ConfigurationError(
        f"unknown scenario {name!r}; available: "
        + ", ".join(scenario_names()))


@dataclass(frozen=True)
class RunSetup:
    """A mixture with initial fields, ready for the time integrator."""

    config: SimConfig
    mixture: Mixture
    fields: list


def _state_moments(spec: SpeciesConfig, density, velocity, temperature):
    """Analytic (n, P, E) of one initial sub-state."""
    vel = np.asarray(velocity, dtype=float)
    if spec.init == "fermi":
        kinetic_t = _fermi_kinetic_temperature(
            density, temperature, spec.scale, spec.mass)
    else:
        kinetic_t = temperature
    momentum = density * spec.mass * vel
    energy = (1.5 * density * kinetic_t
              + 0.5 * density * spec.mass * float(vel @ vel))
    return density, momentum, energy


def _initial_totals(config: SimConfig):
    """Volume-averaged conserved totals of the initial condition."""
    if config.domain is not None:
        centers = config.domain.centers
        w_left = float(np.count_nonzero(centers <= config.split))
        w_left /= config.domain.cells
    else:
        w_left = 1.0
    number, mass_density = 0.0, 0.0
    momentum, energy = np.zeros(3), 0.0
    for spec in config.species:
        states = [(w_left, (spec.density, spec.velocity,
                            spec.temperature))]
        if w_left < 1.0:
            states.append((1.0 - w_left, spec.right_state()))
        for weight, (dens, vel, temp) in states:
            n, mom, erg = _state_moments(spec, dens, vel, temp)
            number += weight * n
            mass_density += weight * spec.mass * n
            momentum = momentum + weight * mom
            energy += weight * erg
    u_mix = momentum / mass_density
    t_mix = (2.0 / 3.0) * (energy - 0.5 * mass_density
                           * float(u_mix @ u_mix)) / number
    return u_mix, t_mix


def _sample_state(spec: SpeciesConfig, density, velocity, temperature,
                  grid: MomentumGrid) -> np.ndarray:
    if spec.init == "fermi":
        return fermi_state(density, velocity, temperature, spec.scale,
                           grid)
    return maxwellian(density, np.asarray(velocity, dtype=float),
                      temperature, grid)


def build_setup(config: SimConfig) -> RunSetup:
    """Build momentum grids, the mixture and initial fields for a config.

    The per-species grids are centred on the mixture velocity and sized by
    the mixture temperature of the initial condition, so the common
    equilibrium the run relaxes towards stays resolved.
    """
    config.validate()
    u_mix, t_mix = _initial_totals(config)
    grids = tuple(build_grid(spec.mass, u_mix, t_mix,
                             config.grid_intervals)
                  for spec in config.species)
    for spec, grid in zip(config.species, grids):
        if spec.statistics is not ParticleStatistics.FERMION:
            continue
        limit = SATURATION_FRACTION * grid.saturation_density
        peak = max(spec.density, spec.right_state()[0])
        if peak >= limit:
            raise ConfigurationError(
                f"species {spec.name!r}: density {peak:g} exceeds the "
                f"grid saturation bound {limit:g}")
    species = tuple(Species(spec.name, spec.mass, spec.statistics)
                    for spec in config.species)
    mixture = Mixture(species, grids,
                      CollisionFrequencies(config.frequencies))
    fields = []
    for spec, grid in zip(config.species, grids):
        left = _sample_state(spec, spec.density, spec.velocity,
                             spec.temperature, grid)
        if config.domain is None:
            fields.append(left[None, :].copy())
            continue
        cells = config.domain.cells
        f = np.empty((cells, grid.size))
        mask = config.domain.centers <= config.split
        f[mask] = left
        if not mask.all():
            f[~mask] = _sample_state(spec, *spec.right_state(), grid)
        fields.append(f)
    return RunSetup(config=config, mixture=mixture, fields=fields)
