import numpy as np
import pytest

from affscale.core import BoxBounds, strict_interior
from affscale.ip_newton import IpConfig, affine_newton_step, damped_projection, minimize
from affscale.problems import MinProblem, rosenbrock, wood
from affscale.scaling import Branch, ConvexWeights, ScalingSpec, ScalingValue


def quadratic(n=3, box=None, x_star=None):
    x_star = np.zeros(n) if x_star is None else np.asarray(x_star, dtype=float)
    return MinProblem(
        id="quad",
        dim=n,
        objective=lambda x: 0.5 * float((x - x_star) @ (x - x_star)),
        gradient=lambda x: x - x_star,
        hessian=lambda x: np.eye(n),
        box=box or BoxBounds.unbounded(n),
        known_minimizer=x_star,
        x0=np.full(n, 0.5),
    )


class TestAffineNewtonStep:
    def test_pure_newton_on_unbounded_quadratic(self):
        x = np.array([0.4, -2.0, 3.0])
        d = ScalingValue(np.ones(3), np.full(3, Branch.FREE))
        s, fell_back = affine_newton_step(x, x, np.eye(3), d)
        np.testing.assert_allclose(s, -x)
        assert not fell_back

    def test_hand_solve_with_theta(self):
        d = ScalingValue(np.array([0.5, 0.5]), np.array([Branch.LOWER, Branch.UPPER]))
        s, _ = affine_newton_step(np.zeros(2), np.array([1.0, 1.0]), 2 * np.eye(2), d)
        np.testing.assert_allclose(s, [-0.25, -0.25])

    def test_min_distance_branch_has_no_theta(self):
        d = ScalingValue(np.array([0.5]), np.array([Branch.MIN_DISTANCE]))
        s, _ = affine_newton_step(np.zeros(1), np.array([1.0]), 2 * np.eye(1), d)
        np.testing.assert_allclose(s, [-0.5])

    def test_stationary(self):
        d = ScalingValue(np.ones(2), np.full(2, Branch.FREE))
        s, _ = affine_newton_step(np.zeros(2), np.zeros(2), np.eye(2), d)
        np.testing.assert_array_equal(s, [0.0, 0.0])

    def test_singular_falls_back_to_scaled_gradient(self):
        d = ScalingValue(np.array([2.0, 3.0]), np.full(2, Branch.FREE))
        s, fell_back = affine_newton_step(np.zeros(2), np.array([1.0, -1.0]), np.zeros((2, 2)), d)
        assert fell_back
        np.testing.assert_array_equal(s, [-2.0, 3.0])


class TestDampedProjection:
    box = BoxBounds.uniform(0.0, 1.0, 1)

    def test_zero_step(self):
        np.testing.assert_array_equal(damped_projection([0.4], [0.0], self.box, 0.995), [0.4])

    def test_far_from_bounds(self):
        x = np.array([0.3, 0.5])
        s = np.array([0.1, -0.05])
        np.testing.assert_array_equal(damped_projection(x, s, BoxBounds.uniform(0.0, 1.0, 2), 0.995), x + s)

    def test_shrunk_box_clamp(self):
        x_next = damped_projection([0.9], [1.0], self.box, 0.995)
        assert x_next[0] == pytest.approx(0.9995, abs=1e-15)

    def test_stays_interior_when_rounding_hits_bound(self):
        # the shrunk lower limit 0.005 * x underflows to the bound itself
        x = np.array([5e-324])
        x_next = damped_projection(x, [-1.0], self.box, 0.995)
        assert strict_interior(x_next, self.box)


class TestMinimize:
    def test_unbounded_quadratic_one_step(self):
        out = minimize(quadratic(), ScalingSpec("KK"), x0=np.array([3.0, -1.0, 2.0]))
        assert out.converged and out.iterations == 1
        assert len(out.distance_history) == out.iterations + 1

    def test_unbounded_matches_damped_newton(self):
        # f = 1/2 x'Ax - b'x, damped Newton with the same sigma rule is the reference
        A = np.array([[3.0, 1.0], [1.0, 2.0]])
        b = np.array([1.0, -1.0])
        x_star = np.linalg.solve(A, b)
        prob = MinProblem("q", 2, lambda x: 0.5 * x @ A @ x - b @ x, lambda x: A @ x - b, lambda x: A,
                          BoxBounds.unbounded(2), x_star, np.array([5.0, 5.0]))
        out = minimize(prob, ScalingSpec("CL"), config=IpConfig(max_iter=5))
        x = prob.x0.copy()
        np.testing.assert_allclose(out.points[1], x + np.linalg.solve(A, b - A @ x))

    def test_requires_interior_start(self):
        with pytest.raises(ValueError):
            minimize(rosenbrock(), ScalingSpec("KK"), x0=np.array([1.0, 0.5]))

    def test_unknown_minimizer_stops_on_scaled_gradient(self):
        prob = quadratic(box=BoxBounds.uniform(-1.0, 1.0, 3))
        prob.known_minimizer = None
        out = minimize(prob, ScalingSpec("KK"))
        assert out.converged

    def test_iterates_strictly_feasible(self):
        for make in (rosenbrock, wood):
            prob = make()
            for spec in (ScalingSpec("CL"), ScalingSpec("KK"), ScalingSpec("HUU", p=2)):
                out = minimize(prob, spec)
                assert all(strict_interior(x, prob.box) for x in out.points)

    def test_rosenbrock_kk_fast_cl_slow(self):
        kk = minimize(rosenbrock(), ScalingSpec("KK")).iterations_to(1e-12)
        cl = minimize(rosenbrock(), ScalingSpec("CL")).iterations_to(1e-12)
        assert kk <= 10
        assert cl >= 2 * kk

    def test_combination_with_kk_weight(self):
        spec = ScalingSpec("CON", weights=ConvexWeights((0.0, 0.5, 0.5, 0.0)), p=2)
        assert minimize(rosenbrock(), spec).iterations_to(1e-12) <= 15
