import dataclasses
import math

import numpy as np
import pytest
from scipy.special import logsumexp

from conftest import random_problem
from mmdreg.entropy import entropy
from mmdreg.kernels import RadialKernel
from mmdreg.measures import DiscreteMeasure, mmd_squared
from mmdreg.objective import ConfigError, RegularizedProblem, StaleSolutionError, tight_conjugate
from mmdreg.solvers import SolverConfig, mirror_descent_tight, solve

GAUSS = RadialKernel("gaussian", 1.0)
TIGHT = SolverConfig(gap_tol=1e-10, step_rule="armijo", max_iters=50000)


def dirac_problem(lam, x=(1.0, 0.0), y=(0.0, 0.0)):
    return RegularizedProblem.build(entropy("tsallis", 2), GAUSS, lam, np.array([x]), np.array([y]))


def test_primal_zero_entropy_at_zero(rng):
    p = random_problem(rng, entropy("zero"), lam=1.0)
    assert p.primal(np.zeros(p.M + p.N)) == 0.0


def test_primal_at_target_is_half_mmd(rng):
    for name in ("kl", "tsallis", "jeffreys"):
        p = random_problem(rng, entropy(name, 3.0 if name == "tsallis" else None))
        mmd = mmd_squared(GAUSS, DiscreteMeasure.uniform(p.x), DiscreteMeasure.uniform(p.y))
        assert p.primal(np.ones(p.M)) == pytest.approx(mmd / (2 * p.lam), rel=1e-10)
        assert p.mmd2 == pytest.approx(mmd, rel=1e-10)


def test_primal_dirac_minimizer():
    for lam in (0.05, 0.7, 3.0):
        p = dirac_problem(lam)
        kxy = math.exp(-0.5)
        q_star = (2 * lam + kxy) / (2 * lam + 1)
        vals = [p.primal(np.array([q_star + d])) for d in (-1e-4, 0.0, 1e-4)]
        assert vals[1] < vals[0] and vals[1] < vals[2]


def test_primal_infeasible_is_inf(rng):
    p = random_problem(rng, entropy("total_variation"))
    q = p.initial_q()
    q[-1] = -p.M / p.N - 1e-3
    assert p.primal(q) == math.inf
    assert p.primal(-np.ones(p.M + p.N)) == math.inf


def test_smooth_grad_at_zero(rng):
    p = random_problem(rng, entropy("kl"))
    np.testing.assert_allclose(p.smooth_grad(np.zeros(p.M)), -p.K_xy.sum(axis=0) / (p.lam * p.M * p.N))
    z = random_problem(rng, entropy("zero"))
    np.testing.assert_array_equal(z.smooth_grad(np.zeros(z.M + z.N)), 0.0)


@pytest.mark.parametrize("name", ["kl", "total_variation"])
def test_smooth_grad_matches_central_difference(name, rng):
    p = random_problem(rng, entropy(name))
    size = p.M + p.N if p.finite else p.M
    q = rng.uniform(0.5, 1.5, size)

    def smooth(v):
        return p.primal(v) - float(np.sum(p.entropy.f(v[: p.M]))) / p.M

    h = 1e-5
    fd = np.array([(smooth(q + h * e) - smooth(q - h * e)) / (2 * h) for e in np.eye(size)])
    np.testing.assert_allclose(p.smooth_grad(q), fd, rtol=1e-6, atol=1e-9)


def test_dual_at_zero_and_weak_duality(rng):
    for name in ("kl", "tsallis", "burg", "total_variation"):
        p = random_problem(rng, entropy(name, 2.0 if name == "tsallis" else None))
        assert p.dual(np.zeros(p.M + p.N)) == 0.0
        j = p.primal(p.initial_q())
        for _ in range(50):
            b = rng.normal(scale=rng.uniform(0.01, 3), size=p.M + p.N)
            assert p.dual(b) <= j + 1e-12


def test_strong_duality_at_optimum(rng):
    p = random_problem(rng, entropy("kl"))
    sol = solve(p, SolverConfig(gap_tol=1e-12))
    assert p.dual(p.coefficients(sol.q)) == pytest.approx(sol.primal, rel=1e-10)


def test_gap_at_uniform_computed_two_ways(rng):
    p = random_problem(rng, entropy("kl"))
    gap, _, J, D = p.gap(np.ones(p.M))
    assert J == pytest.approx(p.mmd2 / (2 * p.lam), rel=1e-12)
    assert D == pytest.approx(p.dual(p.coefficients(np.ones(p.M))), rel=1e-10, abs=1e-12)
    assert gap == pytest.approx(abs(D - J), abs=1e-12)


def test_witness_vanishes_when_measures_coincide(rng):
    y = rng.normal(size=(6, 2))
    p = RegularizedProblem.build(entropy("kl"), GAUSS, 0.5, y, y)
    sol = solve(p)
    np.testing.assert_allclose(p.witness_eval(sol, rng.normal(size=(5, 2))), 0.0, atol=1e-12)


def test_witness_norm_bound(rng):
    for _ in range(10):
        p = random_problem(rng, entropy("kl"))
        sol = solve(p, SolverConfig(gap_tol=1e-12))
        assert p.rkhs_norm(p.coefficients(sol.q)) <= 2 / p.lam * math.sqrt(p.mmd2) + 1e-9


def test_witness_grad_matches_optimal_value_derivative(rng):
    p = random_problem(rng, entropy("kl"), n=5, m=6, lam=0.5)
    sol = solve(p, SolverConfig(gap_tol=1e-13))
    h = 1e-5
    i = 2
    fd = np.zeros(2)
    for k in range(2):
        xs = []
        for s in (h, -h):
            x = p.x.copy()
            x[i, k] += s
            xs.append(solve(p.with_particles(x), SolverConfig(gap_tol=1e-14)).primal)
        fd[k] = (xs[0] - xs[1]) / (2 * h)
    np.testing.assert_allclose(p.N * fd, p.witness_grad(sol, p.x[i]), rtol=1e-4)


def test_particle_grad_matches_witness_grad(rng):
    p = random_problem(rng, entropy("total_variation"))
    sol = solve(p)
    np.testing.assert_allclose(p.particle_grad(sol), p.witness_grad(sol, p.x), atol=1e-12)


def test_stale_solution_is_rejected(rng):
    p = random_problem(rng, entropy("kl"))
    sol = solve(p)
    moved = p.with_particles(p.x + 0.1)
    with pytest.raises(StaleSolutionError):
        moved.witness_grad(sol, p.x)
    assert moved.revision != p.revision


def test_threshold(rng):
    p = random_problem(rng, entropy("total_variation"))
    assert p.threshold() == pytest.approx(2 * math.sqrt(p.mmd2))
    with pytest.raises(ConfigError):
        p.with_particles(p.x, 0.5 * p.threshold()).check_threshold()
    assert random_problem(rng, entropy("marton")).threshold() == math.inf
    assert random_problem(rng, entropy("kl")).threshold() == 0.0


def test_build_rejects_bad_lambda():
    with pytest.raises(ConfigError):
        RegularizedProblem.build(entropy("kl"), GAUSS, 0.0, np.zeros((1, 2)), np.zeros((1, 2)))


def test_tight_conjugate_kl(rng):
    kl = entropy("kl")
    nu = np.full(5, 0.2)
    assert tight_conjugate(kl, nu, np.zeros(5)) == pytest.approx(0.0, abs=1e-15)
    # the same entropy under another name goes through the generic 1-D solver
    generic = dataclasses.replace(kl, name="kl_generic")
    for _ in range(20):
        g = rng.normal(scale=2.0, size=5)
        want = logsumexp(g, b=nu)
        assert tight_conjugate(kl, nu, g) == pytest.approx(want, abs=1e-12)
        assert tight_conjugate(generic, nu, g) == pytest.approx(want, abs=1e-10)


def test_tight_value_at_target_and_dirac():
    p = dirac_problem(0.3)
    sol = mirror_descent_tight(p, TIGHT)
    kxy = math.exp(-0.5)
    assert sol.q[0] == pytest.approx(1.0)
    assert sol.primal == pytest.approx((2 - 2 * kxy) / (2 * 0.3), rel=1e-12)


def test_tight_dominates_plain(rng):
    for _ in range(5):
        p = random_problem(rng, entropy("kl"))
        plain = solve(p, SolverConfig(gap_tol=1e-11))
        tight = mirror_descent_tight(p, TIGHT)
        assert tight.primal >= plain.primal - 1e-9


def test_divergence_vanishes_only_on_target(rng):
    y = rng.normal(size=(6, 2))
    for name in ("kl", "tsallis", "total_variation"):
        e = entropy(name, 2.0 if name == "tsallis" else None)
        same = RegularizedProblem.build(e, GAUSS, 3.0, y, y)
        assert solve(same).primal == pytest.approx(0.0, abs=1e-12)
        other = RegularizedProblem.build(e, GAUSS, 3.0, y + 0.2, y)
        assert solve(other).primal > 1e-6
