from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sosfrac import Polynomial, evaluate, gradient, hessian, monomial_basis, perspective_eval
from sosfrac.poly import (
    evaluate_gradient,
    evaluate_hessian,
    grlex_key,
    perspective_gradient,
)

from conftest import central_gradient, random_poly, xs


def test_basis_degree_one():
    assert monomial_basis(2, 1).entries == ((0, 0), (1, 0), (0, 1))


def test_basis_univariate():
    assert monomial_basis(1, 2).entries == ((0,), (1,), (2,))


def test_basis_size_matches_moment_dimension():
    assert len(monomial_basis(2, 8)) == 45
    assert len(monomial_basis(2, 4)) == 15


def test_basis_prefix_order():
    b = monomial_basis(2, 2).entries
    assert b == ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))


@pytest.mark.parametrize("n,d", [(0, 1), (1, -1)])
def test_basis_rejects_bad_input(n, d):
    with pytest.raises(ValueError):
        monomial_basis(n, d)


@given(st.integers(1, 4), st.integers(0, 6))
def test_basis_count_and_strict_order(n, d):
    b = monomial_basis(n, d)
    assert len(b) == comb(n + d, n)
    keys = [grlex_key(a) for a in b]
    assert all(k1 < k2 for k1, k2 in zip(keys, keys[1:]))
    assert b[0] == (0,) * n
    assert monomial_basis(n, d).entries == b.entries


def test_zero_coefficients_dropped():
    p = Polynomial(2, {(1, 0): 1.0, (0, 1): 1e-15, (2, 0): 0.0})
    assert p.coeffs == {(1, 0): 1.0}
    assert Polynomial(2).degree == 0
    x1, _ = xs(2)
    assert (x1 - x1).is_zero()


def test_rejects_wrong_length_exponent():
    with pytest.raises(ValueError):
        Polynomial(2, {(1, 0, 0): 1.0})


def test_evaluate_fp1_data(fp1):
    assert evaluate(fp1.f, [1, 1]) == 4
    assert evaluate(fp1.g, [1, 1]) == -6
    assert evaluate(fp1.f, [1, 1]) / -evaluate(fp1.g, [1, 1]) == pytest.approx(2 / 3, abs=1e-15)


def test_evaluate_dimension_mismatch(fp1):
    with pytest.raises(ValueError):
        evaluate(fp1.f, [1.0, 2.0, 3.0])


def test_evaluate_batched_matches_pointwise(rng):
    p = random_poly(rng, 3, 5)
    pts = rng.uniform(-1, 1, size=(20, 3))
    batch = evaluate(p, pts)
    assert np.allclose(batch, [evaluate(p, x) for x in pts], rtol=1e-12, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(-3, 3))
def test_evaluation_is_linear(seed, c):
    rng = np.random.default_rng(seed)
    p, q = random_poly(rng, 2, 4), random_poly(rng, 2, 4)
    x = rng.uniform(-1.5, 1.5, size=2)
    assert evaluate(p + q, x) == pytest.approx(evaluate(p, x) + evaluate(q, x), rel=1e-12, abs=1e-12)
    assert evaluate(c * p, x) == pytest.approx(c * evaluate(p, x), rel=1e-12, abs=1e-12)


def test_gradient_quadratic():
    x1, x2 = xs(2)
    g = gradient(x1**2 + x1 * x2 + x2**2)
    assert g[0] == 2 * x1 + x2
    assert g[1] == x1 + 2 * x2


def test_gradient_of_constant_is_zero():
    assert all(gi.is_zero() for gi in gradient(Polynomial.constant(3, 7.0)))


def test_gradient_matches_finite_differences_degree8(rng):
    p = random_poly(rng, 2, 8)
    for x in rng.uniform(-1, 1, size=(10, 2)):
        exact = evaluate_gradient(p, x)
        fd = central_gradient(lambda z: evaluate(p, z), x)
        assert np.abs(fd - exact).max() <= 1e-6 * max(1.0, np.abs(exact).max())


def test_hessian_univariate_quartic():
    (x,) = xs(1)
    assert hessian(x**4)[0][0] == 12 * x**2


def test_hessian_affine_is_zero():
    x1, x2 = xs(2)
    H = hessian(3 * x1 - x2 + 5)
    assert all(h.is_zero() for row in H for h in row)


def test_hessian_fp1_objective_at_one_one(fp1):
    # second-difference oracle (step 1e-4) computed independently; frozen value
    fd = np.empty((2, 2))
    h = 1e-4
    f = lambda z: evaluate(fp1.f, z)
    x = np.array([1.0, 1.0])
    E = np.eye(2) * h
    for i in range(2):
        for j in range(2):
            fd[i, j] = (f(x + E[i] + E[j]) - f(x + E[i] - E[j]) - f(x - E[i] + E[j]) + f(x - E[i] - E[j])) / (4 * h * h)
    assert np.allclose(fd, [[58, 1], [1, 2]], atol=1e-4)
    assert np.array_equal(evaluate_hessian(fp1.f, x), [[58.0, 1.0], [1.0, 2.0]])


def test_hessian_symmetric_at_coefficient_level(rng):
    p = random_poly(rng, 3, 6)
    H = hessian(p)
    for i in range(3):
        for j in range(3):
            assert H[i][j] == H[j][i]


def test_perspective_fp1_optimum(fp1):
    assert perspective_eval(fp1.f, [1 / 6, 1 / 6], 1 / 6) == pytest.approx(2 / 3, rel=1e-14)


def test_perspective_at_unit_t(rng):
    p = random_poly(rng, 2, 5)
    s = rng.normal(size=2)
    assert perspective_eval(p, s, 1.0) == pytest.approx(evaluate(p, s), rel=1e-14, abs=1e-14)


@pytest.mark.parametrize("t", [0.0, -1.0])
def test_perspective_rejects_nonpositive_t(fp1, t):
    with pytest.raises(ValueError):
        perspective_eval(fp1.f, [1.0, 1.0], t)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([0.5, 2.0, 10.0]))
def test_perspective_positive_homogeneity(seed, tau):
    rng = np.random.default_rng(seed)
    p = random_poly(rng, 2, 6)
    s, t = rng.uniform(-1, 1, size=2), rng.uniform(0.2, 2.0)
    base = perspective_eval(p, s, t)
    scaled = perspective_eval(p, tau * s, tau * t)
    assert scaled == pytest.approx(tau * base, rel=1e-12, abs=1e-12 * max(1.0, abs(tau * base)))


def test_perspective_gradient_matches_finite_differences(rng):
    p = random_poly(rng, 2, 6)
    s, t = np.array([0.3, -0.2]), 0.7
    fd = central_gradient(lambda z: perspective_eval(p, z[:2], z[2]), np.append(s, t))
    exact = perspective_gradient(p, s, t)
    assert np.abs(fd - exact).max() <= 1e-6 * max(1.0, np.abs(exact).max())


def test_homogenize(fp1):
    G = fp1.g.homogenize()
    s1, s2, t = xs(3)
    assert G == s1**2 + s2**2 - 8 * t**2


def test_dense_round_trip(rng):
    p = random_poly(rng, 3, 4)
    assert Polynomial.from_dense(3, 4, p.to_dense(4)) == p
