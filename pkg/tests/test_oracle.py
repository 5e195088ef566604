import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from orderopt.linalg import SymMatrix
from orderopt.oracle import (
    NotStronglyConvexError,
    QuadraticProblem,
    f_value,
    noisy_gradient,
    noisy_value,
    order_oracle,
    order_oracle_general,
)

from _helpers import oracle_identity_mismatches, random_problem


def identity_problem():
    return QuadraticProblem.create(np.eye(2))


class TestQuadraticProblem:
    def test_mu_lip_and_minimizer(self):
        p = QuadraticProblem.create([[1.0, 0.0], [0.0, 3.0]], [1.0, -3.0])
        assert p.mu == pytest.approx(1.0, abs=1e-12)
        assert p.lip == pytest.approx(3.0, abs=1e-12)
        assert np.allclose(p.minimizer, [-1.0, 1.0], atol=1e-12)

    def test_minimizer_residual_bound_random(self, rng):
        for _ in range(100):
            p = random_problem(rng, int(rng.integers(2, 6)))
            residual = np.linalg.norm(p.hessian.entries @ p.minimizer + p.linear)
            assert residual <= 1e-9
            assert p.mu <= p.lip

    def test_rejects_indefinite_hessian(self):
        with pytest.raises(NotStronglyConvexError, match="positive definite"):
            QuadraticProblem.create([[1.0, 0.0], [0.0, -1.0]])

    def test_rejects_singular_hessian(self):
        with pytest.raises(NotStronglyConvexError):
            QuadraticProblem.create([[1.0, 1.0], [1.0, 1.0]])

    def test_rejects_bad_linear_shape(self):
        with pytest.raises(ValueError, match="linear"):
            QuadraticProblem(SymMatrix(np.eye(2)), [1.0, 2.0, 3.0])

    def test_fields_are_readonly(self):
        p = identity_problem()
        with pytest.raises(ValueError):
            p.linear[0] = 9.0
        with pytest.raises(ValueError):
            p.minimizer[0] = 9.0


class TestFValue:
    def test_half_norm_squared(self):
        assert f_value(identity_problem(), [3.0, 4.0]) == 12.5

    def test_diagonal_with_constant(self):
        p = QuadraticProblem.create([[1.0, 0.0], [0.0, 3.0]], constant=1.0)
        assert f_value(p, [1.0, 1.0]) == 3.0

    def test_minimizer_is_global_minimum(self, rng):
        p = random_problem(rng, 3)
        fstar = f_value(p, p.minimizer)
        for _ in range(100):
            h = rng.normal(size=3)
            assert f_value(p, p.minimizer + h) >= fstar

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="shape"):
            f_value(identity_problem(), [1.0, 2.0, 3.0])


class TestNoisyGradient:
    def test_noiseless(self):
        g = noisy_gradient(identity_problem(), [1.0, 0.0], [0.0, 0.0])
        assert np.array_equal(g, [1.0, 0.0])

    def test_pure_noise_at_minimizer(self):
        g = noisy_gradient(identity_problem(), [0.0, 0.0], [0.3, -0.4])
        assert np.array_equal(g, [0.3, -0.4])

    def test_direct_substitution(self):
        p = QuadraticProblem.create([[1.0, 0.0], [0.0, 3.0]], [1.0, 0.0])
        g = noisy_gradient(p, [1.0, 1.0], [0.0, 0.5])
        assert np.allclose(g, [2.0, 3.5], atol=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="xi"):
            noisy_gradient(identity_problem(), [1.0, 0.0], [1.0])


class TestOrderOracle:
    def test_larger_value_wins(self):
        assert order_oracle(identity_problem(), [2.0, 0.0], [1.0, 0.0], [0.0, 0.0]) == 1

    def test_tie_returns_plus_one(self):
        x = [1.5, -0.5]
        assert order_oracle(identity_problem(), x, x, [0.2, 0.7]) == 1

    def test_two_point_gradient_example(self):
        # x0=(1,0), e=(0,1), gamma=0.1, xi=(0,-0.5): difference is
        # 2*gamma*<Ax0 + xi, e> = 0.2*(-0.5) = -0.1, so the response is -1.
        x0 = np.array([1.0, 0.0])
        e = np.array([0.0, 1.0])
        xi = np.array([0.0, -0.5])
        got = order_oracle(identity_problem(), x0 + 0.1 * e, x0 - 0.1 * e, xi)
        assert got == -1

    def test_response_is_int_in_two_value_set(self, rng):
        p = random_problem(rng, 2)
        for _ in range(50):
            s = order_oracle(
                p, rng.normal(size=2), rng.normal(size=2), rng.normal(size=2)
            )
            assert isinstance(s, int)
            assert s in (-1, 1)

    def test_unit_step_norm(self, rng):
        # |response| * ||e|| = 1 for unit directions on every query.
        p = random_problem(rng, 3)
        for _ in range(200):
            e = rng.normal(size=3)
            e /= np.linalg.norm(e)
            x = rng.normal(size=3)
            s = order_oracle(p, x + 0.1 * e, x - 0.1 * e, rng.normal(size=3))
            assert abs(np.linalg.norm(s * e) - 1.0) <= 1e-12

    def test_antisymmetry_random(self, rng):
        p = random_problem(rng, 2)
        flipped = 0
        for _ in range(500):
            x = rng.normal(size=2)
            y = rng.normal(size=2)
            xi = rng.normal(size=2)
            if noisy_value(p, x, xi) == noisy_value(p, y, xi):
                continue
            flipped += 1
            assert order_oracle(p, x, y, xi) == -order_oracle(p, y, x, xi)
        assert flipped > 450

    def test_quadratic_exactness_ten_thousand_tuples(self):
        rng = np.random.default_rng(7041)
        mismatches, checked = oracle_identity_mismatches(
            rng, 10_000, (1e-6, 0.1, 100.0)
        )
        assert mismatches == 0
        assert checked >= 29_000

    def test_general_hook_matches_quadratic_path(self, rng):
        p = random_problem(rng, 2)
        for _ in range(100):
            x = rng.normal(size=2)
            y = rng.normal(size=2)
            xi = rng.normal(size=2)
            direct = order_oracle(p, x, y, xi)
            hooked = order_oracle_general(lambda z: f_value(p, z), x, y, xi)
            assert direct == hooked


@given(st.integers(min_value=0, max_value=100_000))
def test_property_antisymmetry(seed):
    rng = np.random.default_rng(seed)
    p = random_problem(rng, 2)
    x = rng.normal(size=2)
    y = rng.normal(size=2)
    xi = rng.normal(size=2)
    if noisy_value(p, x, xi) != noisy_value(p, y, xi):
        assert order_oracle(p, x, y, xi) == -order_oracle(p, y, x, xi)
