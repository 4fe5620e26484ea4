"""Time integration of relaxation plus slab transport.

Two schemes are provided.  The first-order scheme splits each step into a
backward-Euler relaxation solve followed by a forward-Euler transport
update.  The second-order scheme is the stiffly accurate two-stage IMEX
method with implicit diagonal gamma = 1 - sqrt(2)/2: both implicit stages
reuse the conservative relaxation solve, and the stage relaxation rate is
reconstructed algebraically from the solve itself instead of re-evaluating
the equilibria.

Conservation is tracked per step: species densities and the summed
momentum and energy must stay on the totals implied by the accumulated
boundary fluxes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError, InvariantViolation
from .grid import moment_table
from .equilibrium import GRAD_TOL
from .relaxation import Mixture, implicit_update_field, stage_denominators
from .statistics import ParticleStatistics
from .transport import SpatialDomain, cfl_max_dt, transport_tendency

__all__ = ["GAMMA", "DELTA", "RunResult", "run"]

# Implicit diagonal and explicit second-stage weight of the IMEX scheme.
GAMMA = 1.0 - math.sqrt(2.0) / 2.0
DELTA = 1.0 - 1.0 / (2.0 * GAMMA)

SCHEMES = ("euler", "ars222")


@dataclass
class RunResult:
    steps: int
    final_time: float
    max_drift: float
    positivity_violations: int
    fields: list


def _totals(fs, mixture, dx):
    return [moment_table(f, g).sum(axis=0) * dx
            for f, g in zip(fs, mixture.grids)]


def _transport_all(fs, mixture, domain, limited):
    tends, rates = [], []
    for f, g in zip(fs, mixture.grids):
        tend, rate = transport_tendency(f, g, domain, limited)
        tends.append(tend)
        rates.append(rate)
    return tends, rates


def _drift_scales(mixture, totals):
    """Per-slot magnitudes the conservation drift is measured against."""
    scales = []
    for g, tot in zip(mixture.grids, totals):
        n = max(abs(tot[0]), 1e-300)
        scales.append(np.array([n,
                                n * g.momentum_scale, n * g.momentum_scale,
                                n * g.momentum_scale, n * g.energy_scale]))
    return scales


class _ConservationMonitor:
    def __init__(self, mixture, fs, dx, tol):
        self.mixture = mixture
        self.dx = dx
        self.tol = tol
        self.expected = _totals(fs, mixture, dx)
        self.scales = _drift_scales(mixture, self.expected)
        self.max_drift = 0.0

    def accrue(self, rates, weight_dt):
        for k, rate in enumerate(rates):
            self.expected[k] = self.expected[k] + weight_dt * rate

    def check(self, fs, strict):
        totals = _totals(fs, self.mixture, self.dx)
        dens = max(abs(tot[0] - exp[0]) / sc[0] for tot, exp, sc
                   in zip(totals, self.expected, self.scales))
        shared_err = sum(tot[1:] - exp[1:] for tot, exp
                         in zip(totals, self.expected))
        shared_scale = sum(sc[1:] for sc in self.scales)
        shared = float(np.max(np.abs(shared_err) / shared_scale))
        drift = max(dens, shared)
        self.max_drift = max(self.max_drift, drift)
        if drift > self.tol and strict:
            raise InvariantViolation(
                f"conservation drift {drift:.3e} exceeds {self.tol:.1e}")


def _check_positivity(fs, mixture, tol):
    violations = 0
    for f, tau in zip(fs, mixture.taus):
        top = max(float(f.max()), 1e-300)
        if float(f.min()) < -tol * top:
            violations += 1
        elif tau == ParticleStatistics.FERMION and float(f.max()) > 1.0 + tol:
            violations += 1
    return violations


def run(mixture: Mixture, fs, dt: float, t_end: float, scheme: str = "ars222",
        domain: SpatialDomain | None = None, limited: bool = False,
        stride: int = 1, observer=None, strict: bool = False,
        conservation_tol: float = 1e-9, positivity_tol: float = 1e-10,
        grad_tol: float = GRAD_TOL):
    """March the mixture from t = 0 to t_end.

    `fs` holds one (cells, nodes) array per species and is not modified.
    `observer(t, fs)` fires on the initial state, after every `stride`
    steps, and on the final state.  With `strict` a conservation breach
    or a negative distribution raises InvariantViolation instead of being
    counted.  Returns a RunResult.
    """
    if scheme not in SCHEMES:
        raise ConfigurationError(f"unknown scheme {scheme!r}")
    if dt <= 0.0 or t_end < 0.0:
        raise DomainError("dt must be positive and t_end non-negative")
    if domain is not None:
        order = 2 if limited else 1
        limit = cfl_max_dt(mixture, domain, order)
        if dt >= limit:
            raise ConfigurationError(
                f"dt = {dt:.6g} violates the transport stability bound "
                f"{limit:.6g} for order {order}")
        dx = domain.dx
    else:
        dx = 1.0

    fs = [np.array(f, dtype=float, copy=True) for f in fs]
    cells = fs[0].shape[0]
    warm = [dict() for _ in range(cells)]
    monitor = _ConservationMonitor(mixture, fs, dx, conservation_tol)
    positivity_violations = 0

    if observer is not None:
        observer(0.0, fs)

    t = 0.0
    step = 0
    while t < t_end - 1e-12 * t_end:
        h = min(dt, t_end - t)

        if scheme == "euler":
            fs, warm = implicit_update_field(fs, mixture, h, warm,
                                             grad_tol=grad_tol)
            if domain is not None:
                tends, rates = _transport_all(fs, mixture, domain, limited)
                fs = [f + h * tend for f, tend in zip(fs, tends)]
                monitor.accrue(rates, h)
        else:
            if domain is not None:
                tend0, rate0 = _transport_all(fs, mixture, domain, limited)
                g1 = [f + h * GAMMA * tend for f, tend in zip(fs, tend0)]
            else:
                g1 = fs
            f1, warm = implicit_update_field(g1, mixture, h * GAMMA, warm,
                                             grad_tol=grad_tol)

            d = stage_denominators(mixture.nu, h * GAMMA)
            r1 = [(f1[k] - d[k] * g1[k]) / (d[k] * h * GAMMA)
                  - mixture.nu.row_sums[k] * f1[k]
                  for k in range(mixture.size)]

            g2 = [fs[k] + h * (1.0 - GAMMA) * r1[k]
                  for k in range(mixture.size)]
            if domain is not None:
                tend1, rate1 = _transport_all(f1, mixture, domain, limited)
                for k in range(mixture.size):
                    g2[k] += h * (DELTA * tend0[k] + (1.0 - DELTA) * tend1[k])
                monitor.accrue([DELTA * a + (1.0 - DELTA) * b
                                for a, b in zip(rate0, rate1)], h)
            fs, warm = implicit_update_field(g2, mixture, h * GAMMA, warm,
                                             grad_tol=grad_tol)

        t += h
        step += 1

        bad = _check_positivity(fs, mixture, positivity_tol)
        if bad and strict:
            raise InvariantViolation(
                f"distribution left its admissible range at t = {t:.6g}")
        positivity_violations += bad
        monitor.check(fs, strict)

        final = t >= t_end - 1e-12 * t_end
        if observer is not None and (final or step % stride == 0):
            observer(t, fs)

    return RunResult(steps=step, final_time=t, max_drift=monitor.max_drift,
                     positivity_violations=positivity_violations, fields=fs)
