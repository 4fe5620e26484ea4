"""Shared builders for the two-species relaxation benchmark used across tests."""

import numpy as np

from qbgk.grid import Moments, build_grid, maxwellian, mixture_temperature, mixture_velocity
from qbgk.relaxation import CollisionFrequencies, Mixture, Species
from qbgk.statistics import ParticleStatistics

# Benchmark initial data: two species with a velocity and temperature gap.
PAIR_DATA = (
    dict(name="1", mass=1.0, density=1.0, velocity=(0.5, 0.0, 0.0), temperature=1.0),
    dict(name="2", mass=1.5, density=1.2, velocity=(0.1, 0.0, 0.0), temperature=0.5),
)


def analytic_moments(mass, density, velocity, temperature):
    """Exact (n, P, E) of a Maxwellian with the given parameters."""
    velocity = np.asarray(velocity, dtype=float)
    momentum = density * mass * velocity
    energy = 1.5 * density * temperature + 0.5 * density * mass * velocity @ velocity
    return Moments(n=density, momentum=momentum, energy=energy, mass=mass)


def pair_initial_moments():
    return [analytic_moments(d["mass"], d["density"], d["velocity"], d["temperature"])
            for d in PAIR_DATA]


def make_pair(stats="ff", intervals=16, nu=1.0):
    """Mixture and Maxwellian initial states for the benchmark pair.

    `stats` is a two-character string over {f, c, b} choosing the
    statistics of each species.  Grids are shared-mixture grids, one per
    species, sized by `intervals`.
    """
    moments = pair_initial_moments()
    masses = [d["mass"] for d in PAIR_DATA]
    u_mix = mixture_velocity(moments, masses)
    t_mix = mixture_temperature(moments, masses)

    species = tuple(
        Species(d["name"], d["mass"], ParticleStatistics.parse(ch))
        for d, ch in zip(PAIR_DATA, stats))
    grids = tuple(build_grid(d["mass"], u_mix, t_mix, intervals=intervals)
                  for d in PAIR_DATA)
    table = [[nu, nu], [nu, nu]]
    mixture = Mixture(species, grids, CollisionFrequencies(table))
    fs = [maxwellian(d["density"], d["velocity"], d["temperature"], g)
          for d, g in zip(PAIR_DATA, grids)]
    return mixture, fs


def as_field(fs):
    """Wrap flat per-species states as one-cell spatial fields."""
    return [f[None, :] for f in fs]
