import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from mmdreg.kernels import FAMILIES, KernelError, RadialKernel, spectral_norm

coords = arrays(np.float64, (4, 2), elements=st.floats(-3, 3))


def test_kernel_value_examples():
    x = np.array([0.3, -1.2])
    assert RadialKernel("gaussian", 1.0)(x, x) == 1.0
    assert RadialKernel("inverse_multiquadric", 0.05)(x, x) == pytest.approx(4.4721360, abs=1e-7)
    spline = RadialKernel("spline_compact", 1.0)
    assert spline(np.zeros(2), np.array([1.0, 0.0])) == 0.0
    assert spline(np.zeros(2), np.array([1.5, 2.0])) == 0.0


def test_gaussian_grad_example():
    g = RadialKernel("gaussian", 1.0).grad(np.array([1.0, 0.0]), np.zeros(2))
    np.testing.assert_allclose(g, [-math.exp(-0.5), 0.0], atol=1e-15)


@pytest.mark.parametrize("family", FAMILIES)
def test_grad_vanishes_on_diagonal(family):
    x = np.array([0.4, 0.1])
    np.testing.assert_array_equal(RadialKernel(family, 0.7).grad(x, x), 0.0)


@pytest.mark.parametrize("family", FAMILIES)
def test_grad_matches_central_difference(family, rng):
    k = RadialKernel(family, 0.8)
    h = 1e-6
    for _ in range(20):
        x, z = rng.normal(size=2), rng.normal(size=2)
        fd = np.array([(k(x + h * e, z) - k(x - h * e, z)) / (2 * h) for e in np.eye(2)])
        assert np.linalg.norm(k.grad(x, z) - fd) <= 1e-6


@pytest.mark.parametrize("family", FAMILIES)
def test_weighted_grad_is_sum_of_grads(family, rng):
    k = RadialKernel(family, 1.3)
    x, z, w = rng.normal(size=(5, 2)), rng.normal(size=(7, 2)), rng.normal(size=7)
    want = np.array([sum(w[j] * k.grad(xi, z[j]) for j in range(7)) for xi in x])
    np.testing.assert_allclose(k.weighted_grad(x, z, w), want, atol=1e-14)


def test_gram_examples():
    k = RadialKernel("gaussian", 2.0)
    np.testing.assert_array_equal(k.gram(np.array([[1.0, 2.0]])), [[1.0]])
    a = np.array([[0.0, 0.0], [math.sqrt(2 * math.log(2)) * math.sqrt(2.0), 0.0]])
    assert k.gram(a)[0, 1] == pytest.approx(0.5, abs=1e-14)


@settings(max_examples=40, deadline=None)
@given(coords, coords, st.sampled_from(FAMILIES))
def test_gram_transpose_symmetry(a, b, family):
    k = RadialKernel(family, 0.9)
    np.testing.assert_array_equal(k.gram(a, b), k.gram(b, a).T)


@settings(max_examples=40, deadline=None)
@given(coords, st.sampled_from(FAMILIES))
def test_gram_is_positive_semidefinite(a, family):
    g = RadialKernel(family, 0.9).gram(a)
    assert np.linalg.eigvalsh(g).min() >= -1e-9 * max(1.0, g.max())


def test_gram_matches_pairwise_loop(rng):
    k = RadialKernel("matern_3_2", 0.6)
    a, b = rng.normal(size=(6, 3)), rng.normal(size=(4, 3))
    want = [[k(ai, bj) for bj in b] for ai in a]
    np.testing.assert_allclose(k.gram(a, b), want, rtol=1e-13)


def test_embedding_constant():
    assert RadialKernel("gaussian", 4.0).embedding_constant() == pytest.approx(0.5)
    assert RadialKernel("inverse_multiquadric", 0.05).embedding_constant() == pytest.approx(0.05 ** -0.75)
    for s2 in (0.3, 1.0, 7.0):
        assert RadialKernel("gaussian", 4 * s2).embedding_constant() == pytest.approx(
            RadialKernel("gaussian", s2).embedding_constant() / 2)


def test_convexity_constant():
    assert RadialKernel("gaussian", 1.0).convexity_constant(1.0, 2) == pytest.approx(8.0)
    assert RadialKernel("inverse_multiquadric", 1.0).convexity_constant(1.0, 1) == pytest.approx(12.0)
    k = RadialKernel("gaussian", 0.4, dim=3)
    assert k.convexity_constant(2.0) == pytest.approx(k.convexity_constant(1.0) / 2)
    with pytest.raises(KernelError):
        RadialKernel("matern_3_2").convexity_constant(1.0, 2)


def test_spectral_norm_examples(rng):
    assert spectral_norm(np.eye(3)) == pytest.approx(1.0, rel=1e-12)
    assert spectral_norm(np.diag([1.0, 5.0, 2.0])) == pytest.approx(5.0, rel=1e-9)
    g = RadialKernel("gaussian", 1.0).gram(rng.normal(size=(10, 2)))
    assert spectral_norm(g) == pytest.approx(np.linalg.eigvalsh(g).max(), rel=1e-6)


def test_spectral_norm_falls_back_on_stall():
    # +-1 eigenvalues of equal size make power iteration oscillate
    m = np.diag([1.0, -1.0])
    assert spectral_norm(m, start=np.array([1.0, 1.0]), max_iter=5) == pytest.approx(1.0)


def test_kernel_validation():
    with pytest.raises(KernelError):
        RadialKernel("laplace")
    with pytest.raises(KernelError):
        RadialKernel("gaussian", 0.0)
    with pytest.raises(KernelError):
        RadialKernel("gaussian", 1.0).gram(np.zeros((2, 2)), np.zeros((2, 3)))
    with pytest.raises(KernelError):
        RadialKernel("gaussian", 1.0, dim=3).gram(np.zeros((2, 2)))


@pytest.mark.parametrize("family", ["gaussian", "inverse_multiquadric"])
def test_profile_and_curvature_decrease(family):
    k = RadialKernel(family, 0.7)
    r = np.linspace(1e-3, 20, 2000)
    assert np.all(np.diff(k.phi(r)) <= 0)
    # the second derivative is the slope of dphi
    h = 1e-6
    d2 = (k.dphi(r + h) - k.dphi(r - h)) / (2 * h)
    assert np.all(np.diff(d2) <= 1e-9)
    assert d2[0] == pytest.approx(k.d2phi_at_zero(), rel=1e-2)
