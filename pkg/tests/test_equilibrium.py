"""Equilibrium parameter maps, dual potentials, Newton solves, and pair constraints."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import PAIR_DATA, make_pair
from qbgk.equilibrium import (
    IntraAlpha,
    IntraPotential,
    InterPotential,
    abc_to_alpha,
    alpha_to_abc,
    assemble_targets_inter,
    assemble_targets_intra,
    classical_fit,
    equilibrium_field,
    newton_minimize,
    solve_all_pairs,
    solve_inter,
    solve_intra,
)
from qbgk.errors import DomainError, SaturationError
from qbgk.grid import Moments, build_grid, compute_moments, maxwellian, moment_table
from qbgk.statistics import entropy_integrand, eta_integrals

# Closed-form multiplier of the unit Maxwellian n=1, U=0, T=1 at mass 1:
# a0 = -c = -(3/2) ln(2 pi), a2 = -1.
A0_UNIT = -1.5 * math.log(2.0 * math.pi)


def unit_grid(intervals=48):
    return build_grid(1.0, np.zeros(3), 1.0, intervals=intervals)


def test_alpha_to_abc_unit_maxwellian():
    alpha = IntraAlpha(a0=A0_UNIT, a1=np.zeros(3), a2=-1.0)
    a, b, c = alpha_to_abc(alpha, 1.0)
    assert a == pytest.approx(0.5)
    assert_allclose(b, np.zeros(3))
    assert c == pytest.approx(-A0_UNIT)
    assert c == pytest.approx(2.756815, rel=1e-6)
    # Physical temperature 1/(2a) = -1/a2.
    assert -1.0 / alpha.a2 == pytest.approx(1.0)


def test_abc_alpha_round_trip():
    rng = np.random.default_rng(5)
    for _ in range(10):
        a = rng.uniform(0.3, 2.0)
        b = rng.uniform(-0.6, 0.6, size=3)
        c = rng.uniform(-2.0, 4.0)
        mass = rng.uniform(0.5, 2.0)
        alpha = abc_to_alpha(a, b, c, mass)
        back = alpha_to_abc(alpha, mass)
        assert back[0] == pytest.approx(a, rel=1e-12)
        assert_allclose(back[1], b, rtol=1e-12, atol=1e-14)
        assert back[2] == pytest.approx(c, rel=1e-12)


def test_alpha_to_abc_rejects_bad_a2():
    for a2 in (0.0, 0.7):
        with pytest.raises(DomainError):
            alpha_to_abc(IntraAlpha(a0=0.0, a1=np.zeros(3), a2=a2), 1.0)


def test_classical_fit_unit():
    m = Moments(n=1.0, momentum=np.zeros(3), energy=1.5)
    alpha = classical_fit(m, 1.0)
    assert alpha.a0 == pytest.approx(A0_UNIT, rel=1e-14)
    assert_allclose(alpha.a1, np.zeros(3))
    assert alpha.a2 == pytest.approx(-1.0)


def test_classical_fit_velocity_parameter():
    # The fitted b equals the bulk velocity P/(n m).
    rng = np.random.default_rng(13)
    for _ in range(5):
        n = rng.uniform(0.5, 2.0)
        u = rng.uniform(-0.5, 0.5, size=3)
        temp = rng.uniform(0.4, 1.6)
        mass = rng.uniform(0.5, 2.0)
        mom = Moments(n=n, momentum=n * mass * u,
                      energy=1.5 * n * temp + 0.5 * n * mass * (u @ u))
        a, b, _ = alpha_to_abc(classical_fit(mom, mass), mass)
        assert a == pytest.approx(0.5 / temp, rel=1e-12)
        assert_allclose(b, u, rtol=1e-12, atol=1e-14)


def test_equilibrium_field_matches_maxwellian():
    g = build_grid(1.0, np.array([0.3, 0.0, 0.0]), 1.2, intervals=16)
    mom = Moments(n=0.8, momentum=0.8 * np.array([0.3, 0.0, 0.0]),
                  energy=1.5 * 0.8 * 1.2 + 0.5 * 0.8 * 0.09)
    alpha = classical_fit(mom, 1.0)
    field = equilibrium_field(alpha, g, 0)
    assert_allclose(field, maxwellian(0.8, [0.3, 0.0, 0.0], 1.2, g), rtol=1e-12)


def test_equilibrium_field_vacuum():
    g = unit_grid(intervals=8)
    field = equilibrium_field(IntraAlpha.vacuum(), g, 1)
    assert np.all(field == 0.0)


def test_assemble_targets_intra():
    g = unit_grid()
    zeros = assemble_targets_intra(np.zeros(g.nodes.shape[0]), g, 1.0)
    assert_allclose(zeros, np.zeros(5))

    f = maxwellian(1.0, np.zeros(3), 1.0, g)
    mu = assemble_targets_intra(f, g, 1.0)
    assert_allclose(mu, [1.0, 0.0, 0.0, 0.0, 1.5], rtol=1e-7, atol=1e-12)
    assert_allclose(assemble_targets_intra(f, g, 2.5), 2.5 * mu, rtol=1e-14)


def test_assemble_targets_inter_benchmark():
    # The shared-mixture grids truncate the hot species' tails, so the
    # sampled moments carry a ~1e-6 bias against the exact values.
    mixture, fs = make_pair("cc", intervals=48)
    g1, g2 = mixture.grids
    mu = assemble_targets_inter(fs[0], fs[1], g1, g2, 1.0, 1.0)
    assert_allclose(mu, [1.0, 1.2, 0.68, 0.0, 0.0, 2.534], rtol=1e-5, atol=1e-9)
    # Swapping the species swaps the density slots only.
    swapped = assemble_targets_inter(fs[1], fs[0], g2, g1, 1.0, 1.0)
    assert_allclose(swapped[:2], mu[1::-1], rtol=1e-14)
    assert_allclose(swapped[2:], mu[2:], rtol=1e-14)


def test_solve_intra_classical_benchmark():
    g = unit_grid()
    alpha, _ = solve_intra(np.array([1.0, 0.0, 0.0, 0.0, 1.5]), g, 0)
    assert alpha.a0 == pytest.approx(A0_UNIT, rel=1e-7)
    assert_allclose(alpha.a1, np.zeros(3), atol=1e-9)
    assert alpha.a2 == pytest.approx(-1.0, rel=1e-7)
    m = compute_moments(equilibrium_field(alpha, g, 0), g)
    assert_allclose([m.n, *m.momentum, m.energy], [1.0, 0.0, 0.0, 0.0, 1.5],
                    rtol=1e-10, atol=1e-12)


def test_solve_intra_warm_start_is_fixed_point():
    g = unit_grid(intervals=16)
    targets = np.array([1.0, 0.0, 0.0, 0.0, 1.5])
    alpha, _ = solve_intra(targets, g, 0)
    again, iterations = solve_intra(targets, g, 0, warm_start=alpha)
    assert iterations == 0
    assert again.a0 == alpha.a0


def test_solve_intra_coefficient_cancels():
    g = unit_grid(intervals=16)
    targets = np.array([1.0, 0.0, 0.0, 0.0, 1.5])
    base, _ = solve_intra(targets, g, 0)
    coeff = 0.980392
    scaled, _ = solve_intra(coeff * targets, g, 0, coeff=coeff)
    assert_allclose(scaled.as_vector(), base.as_vector(), rtol=1e-10, atol=1e-12)


def test_solve_intra_quantum_round_trip():
    """Sampling K(alpha*) and re-solving from its moments recovers alpha*."""
    cases = (
        (1, IntraAlpha(a0=-1.2, a1=np.array([0.2, 0.0, 0.0]), a2=-0.9)),
        (-1, IntraAlpha(a0=-2.5, a1=np.array([0.1, 0.0, 0.0]), a2=-0.8)),
    )
    for tau, alpha_true in cases:
        _, b, _ = alpha_to_abc(alpha_true, 1.0)
        theta = -1.0 / alpha_true.a2
        g = build_grid(1.0, b, theta, intervals=32)
        field = equilibrium_field(alpha_true, g, tau)
        if tau == 1:
            assert np.all(field < 1.0)
        assert np.all(field > 0.0)
        targets = assemble_targets_intra(field, g, 1.0)
        alpha, _ = solve_intra(targets, g, tau)
        assert_allclose(alpha.as_vector(), alpha_true.as_vector(),
                        rtol=1e-8, atol=1e-10)


def test_solve_intra_vacuum_and_errors():
    g = unit_grid(intervals=8)
    alpha, iterations = solve_intra(np.zeros(5), g, 1)
    assert alpha.is_vacuum
    assert iterations == 0
    with pytest.raises(DomainError):
        solve_intra(np.array([-1.0, 0.0, 0.0, 0.0, 1.5]), g, 0)
    # Kinetic energy alone, no internal energy.
    with pytest.raises(DomainError):
        solve_intra(np.array([1.0, 3.0, 0.0, 0.0, 4.5]), g, 0)


def test_solve_intra_fermion_saturation():
    g = unit_grid(intervals=8)
    # The grid holds at most integral(1) = 1728 fermions per volume.
    with pytest.raises(SaturationError):
        solve_intra(np.array([1727.0, 0.0, 0.0, 0.0, 3000.0]), g, 1)


def test_gradient_matches_finite_differences():
    g = unit_grid(intervals=12)
    targets = np.array([1.0, 0.05, 0.0, 0.0, 1.55])
    for tau, shift in ((0, 0.0), (1, 0.0), (-1, -1.5)):
        pot = IntraPotential(g, tau, targets)
        avec = classical_fit(Moments.from_vector(targets), 1.0).as_vector()
        avec = (avec + np.array([shift, 0.02, -0.01, 0.0, 0.03])) * g.scale
        grad, hess = pot.grad_hess(avec)
        assert_allclose(hess, hess.T, rtol=1e-12, atol=1e-14)
        eps = 1e-6
        for i in range(5):
            step = np.zeros(5)
            step[i] = eps
            fd = (pot.value(avec + step) - pot.value(avec - step)) / (2.0 * eps)
            assert grad[i] == pytest.approx(fd, rel=1e-6, abs=1e-8)


def test_inter_gradient_matches_finite_differences():
    mixture, fs = make_pair("fc", intervals=12)
    g1, g2 = mixture.grids
    targets = assemble_targets_inter(fs[0], fs[1], g1, g2, 1.0, 1.0)
    pot = InterPotential((g1, g2), (1, 0), targets, 1.0)
    alpha, _ = solve_inter(targets, (g1, g2), (1, 0), (1.0, 1.0))
    avec = alpha.as_vector() * pot.scale
    avec = avec * (1.0 + np.array([0.03, -0.02, 0.05, 0.0, 0.0, -0.04]))
    grad, hess = pot.grad_hess(avec)
    assert_allclose(hess, hess.T, rtol=1e-12, atol=1e-14)
    eps = 1e-6
    for i in range(6):
        step = np.zeros(6)
        step[i] = eps
        fd = (pot.value(avec + step) - pot.value(avec - step)) / (2.0 * eps)
        assert grad[i] == pytest.approx(fd, rel=1e-6, abs=1e-8)


class QuadraticPotential:
    """Fixed SPD quadratic, for which Newton is exact in one step."""

    def __init__(self):
        root = np.array([[2.0, 0.0, 0.0], [1.0, 1.5, 0.0], [0.5, -0.3, 1.0]])
        self.hess = root @ root.T
        self.linear = np.array([1.0, -2.0, 0.5])
        self.tolerance_scale = np.ones(3)

    def value(self, x):
        return 0.5 * float(x @ self.hess @ x) - float(self.linear @ x)

    def grad_hess(self, x):
        return self.hess @ x - self.linear, self.hess


def test_newton_quadratic_one_step():
    pot = QuadraticPotential()
    exact = np.linalg.solve(pot.hess, pot.linear)
    x, iterations = newton_minimize(pot, np.zeros(3))
    assert iterations == 1
    assert_allclose(x, exact, rtol=1e-12, atol=1e-14)
    _, again = newton_minimize(pot, exact)
    assert again == 0


def test_classical_inversion_random_round_trip():
    rng = np.random.default_rng(23)
    g = unit_grid(intervals=24)
    for _ in range(6):
        n = rng.uniform(0.5, 2.0)
        u = rng.uniform(-0.3, 0.3, size=3)
        temp = rng.uniform(0.7, 1.4)
        mom = Moments(n=n, momentum=n * u,
                      energy=1.5 * n * temp + 0.5 * n * (u @ u))
        alpha_true = classical_fit(mom, 1.0)
        field = equilibrium_field(alpha_true, g, 0)
        targets = assemble_targets_intra(field, g, 1.0)
        alpha, _ = solve_intra(targets, g, 0)
        assert_allclose(alpha.as_vector(), alpha_true.as_vector(),
                        rtol=1e-9, atol=1e-11)


def inter_constraint_residual(alpha, gs, taus, coeffs, targets):
    """Worst relative violation of the coupled conservation constraints."""
    fields = [equilibrium_field(alpha.species_alpha(i), gs[i], taus[i])
              for i in (0, 1)]
    moments = [compute_moments(f, g) for f, g in zip(fields, gs)]
    achieved = np.array([
        coeffs[0] * moments[0].n,
        coeffs[1] * moments[1].n,
        *(coeffs[0] * moments[0].momentum + coeffs[1] * moments[1].momentum),
        coeffs[0] * moments[0].energy + coeffs[1] * moments[1].energy,
    ])
    scale = max(abs(targets[0]), abs(targets[1]), abs(targets[5]))
    return float(np.max(np.abs(achieved - targets))) / scale, fields


def test_solve_inter_classical_benchmark():
    mixture, fs = make_pair("cc", intervals=32)
    grids = mixture.grids
    targets = assemble_targets_inter(fs[0], fs[1], grids[0], grids[1], 1.0, 1.0)
    alpha, _ = solve_inter(targets, grids, (0, 0), (1.0, 1.0))

    residual, _ = inter_constraint_residual(alpha, grids, (0, 0), (1.0, 1.0),
                                            targets)
    assert residual < 1e-9

    # Shared velocity parameter: b = (P1 + P2) / (N1 + N2), up to the
    # sampling bias of the targets themselves.
    _, b, c12 = alpha_to_abc(alpha.species_alpha(0), grids[0].mass)
    _, b2, c21 = alpha_to_abc(alpha.species_alpha(1), grids[1].mass)
    assert_allclose(b, b2, rtol=1e-12)
    assert_allclose(b, [0.68 / 2.8, 0.0, 0.0], rtol=2e-5, atol=1e-9)

    # Density-ratio relationship through the classical eta integrals,
    # exact against the discrete densities the solve worked with.
    ratio = (grids[0].mass ** 1.5 * eta_integrals(c12, 0)[0]) / \
        (grids[1].mass ** 1.5 * eta_integrals(c21, 0)[0])
    assert ratio == pytest.approx(targets[0] / targets[1], rel=1e-9)
    assert ratio == pytest.approx(1.0 / 1.2, rel=1e-5)


def test_solve_inter_quantum_pairs():
    for stats, taus in (("ff", (1, 1)), ("fb", (1, -1))):
        mixture, fs = make_pair(stats, intervals=24)
        grids = mixture.grids
        targets = assemble_targets_inter(fs[0], fs[1], grids[0], grids[1],
                                         1.0, 1.0)
        alpha, _ = solve_inter(targets, grids, taus, (1.0, 1.0))
        residual, fields = inter_constraint_residual(alpha, grids, taus,
                                                     (1.0, 1.0), targets)
        assert residual < 1e-9
        for tau, field in zip(taus, fields):
            assert np.all(field > 0.0)
            if tau == 1:
                assert np.all(field < 1.0)
        # Eq-ratio relationship with the matching quantum eta integrals,
        # against the discrete density ratio of the constraints.
        _, _, c12 = alpha_to_abc(alpha.species_alpha(0), grids[0].mass)
        _, _, c21 = alpha_to_abc(alpha.species_alpha(1), grids[1].mass)
        ratio = (grids[0].mass ** 1.5 * eta_integrals(c12, taus[0])[0]) / \
            (grids[1].mass ** 1.5 * eta_integrals(c21, taus[1])[0])
        assert ratio == pytest.approx(targets[0] / targets[1], rel=1e-6)


def test_solve_inter_asymmetric_coefficients():
    mixture, fs = make_pair("cc", intervals=16)
    grids = mixture.grids
    coeffs = (0.8, 1.3)
    targets = assemble_targets_inter(fs[0], fs[1], grids[0], grids[1], *coeffs)
    alpha, _ = solve_inter(targets, grids, (0, 0), coeffs)
    residual, _ = inter_constraint_residual(alpha, grids, (0, 0), coeffs,
                                            targets)
    assert residual < 1e-9


def test_solve_inter_symmetric_species():
    g = unit_grid(intervals=16)
    f = maxwellian(1.0, [0.2, 0.0, 0.0], 1.0, g)
    targets = assemble_targets_inter(f, f, g, g, 1.0, 1.0)
    alpha, _ = solve_inter(targets, (g, g), (0, 0), (1.0, 1.0))
    assert alpha.a0[0] == pytest.approx(alpha.a0[1], rel=1e-10)
    _, b, _ = alpha_to_abc(alpha.species_alpha(0), 1.0)
    assert_allclose(b, [0.2, 0.0, 0.0], rtol=1e-7, atol=1e-9)


def test_solve_all_pairs_structure():
    mixture, fs = make_pair("cf", intervals=12)
    grids = mixture.grids
    taus = (0, 1)
    intra, inter = solve_all_pairs(fs, grids, taus, [1.0, 1.0],
                                   {(0, 1): (1.0, 1.0)})
    assert len(intra) == 2
    assert set(inter) == {(0, 1)}
    # Intra solves must match each species' own moments.
    for f, g, tau, alpha in zip(fs, grids, taus, intra):
        m = compute_moments(f, g)
        got = compute_moments(equilibrium_field(alpha, g, tau), g)
        assert_allclose([got.n, *got.momentum, got.energy],
                        [m.n, *m.momentum, m.energy], rtol=1e-9, atol=1e-11)
    # Zero intra coefficient skips the solve.
    intra, inter = solve_all_pairs(fs, grids, taus, [0.0, 1.0], {})
    assert intra[0] is None
    assert inter == {}


def test_solve_all_pairs_three_species():
    """Three-species decoupling: 3 intra + 3 pair solves, all constraints met."""
    masses = (1.0, 1.5, 2.0)
    taus = (0, 1, 0)
    data = ((1.0, 0.4, 1.0), (1.2, 0.0, 0.6), (0.7, -0.2, 0.9))
    moments = [Moments(n=n, momentum=np.array([n * m * u, 0.0, 0.0]),
                       energy=1.5 * n * t + 0.5 * n * m * u * u, mass=m)
               for m, (n, u, t) in zip(masses, data)]
    from qbgk.grid import mixture_temperature, mixture_velocity
    u_mix = mixture_velocity(moments, masses)
    t_mix = mixture_temperature(moments, masses)
    grids = [build_grid(m, u_mix, t_mix, intervals=16) for m in masses]
    gs = [maxwellian(n, [u, 0.0, 0.0], t, g)
          for (n, u, t), g in zip(data, grids)]

    pair_coeffs = {(0, 1): (1.0, 0.9), (0, 2): (0.5, 0.7), (1, 2): (1.1, 1.0)}
    intra, inter = solve_all_pairs(gs, grids, taus, [1.0, 1.0, 1.0],
                                   pair_coeffs)
    assert len(intra) == 3
    assert set(inter) == set(pair_coeffs)
    for (k, j), alpha in inter.items():
        coeffs = pair_coeffs[(k, j)]
        targets = assemble_targets_inter(gs[k], gs[j], grids[k], grids[j],
                                         *coeffs)
        residual, _ = inter_constraint_residual(
            alpha, (grids[k], grids[j]), (taus[k], taus[j]), coeffs, targets)
        assert residual < 1e-9


def test_inter_equilibrium_minimizes_entropy():
    """Constraint-preserving perturbations cannot lower the entropy sum."""
    mixture, fs = make_pair("cc", intervals=12)
    grids = mixture.grids
    targets = assemble_targets_inter(fs[0], fs[1], grids[0], grids[1], 1.0, 1.0)
    alpha, _ = solve_inter(targets, grids, (0, 0), (1.0, 1.0))
    fields = [equilibrium_field(alpha.species_alpha(i), grids[i], 0)
              for i in (0, 1)]

    quads = [g.weights * g.cell_volume for g in grids]
    sizes = [g.nodes.shape[0] for g in grids]
    stacked = np.concatenate(fields)
    # Perturb only well-populated nodes so the state stays in-domain.
    bulk = stacked > 1e-3 * stacked.max()

    # Rows of the discrete constraint matrix over the stacked pair state.
    rows = [
        np.concatenate([quads[0], np.zeros(sizes[1])]),
        np.concatenate([np.zeros(sizes[0]), quads[1]]),
    ]
    for comp in range(3):
        rows.append(np.concatenate([quads[0] * grids[0].nodes[:, comp],
                                    quads[1] * grids[1].nodes[:, comp]]))
    energies = [np.sum(g.nodes ** 2, axis=1) / (2.0 * g.mass) for g in grids]
    rows.append(np.concatenate([quads[0] * energies[0], quads[1] * energies[1]]))
    cmat = np.array(rows)
    cmat /= np.linalg.norm(cmat, axis=1, keepdims=True)
    cbulk = cmat[:, bulk]

    def entropy_sum(pert):
        total = 0.0
        split = np.split(pert, [sizes[0]])
        for f, d, quad in zip(fields, split, quads):
            total += float(quad @ entropy_integrand(f + d, 0))
        return total

    base = entropy_sum(np.zeros(sizes[0] + sizes[1]))
    rng = np.random.default_rng(31)
    proj = np.linalg.pinv(cbulk) @ cbulk
    for _ in range(5):
        raw = rng.standard_normal(int(bulk.sum())) * stacked[bulk]
        reduced = raw - proj @ raw
        delta = np.zeros(sizes[0] + sizes[1])
        delta[bulk] = reduced
        # Cap the relative size so the perturbed state stays positive.
        delta *= 1e-3 / np.max(np.abs(delta[bulk]) / stacked[bulk])
        assert_allclose(cmat @ delta, np.zeros(6), atol=1e-10)
        assert np.all(stacked + delta > 0.0)
        assert entropy_sum(delta) > base
