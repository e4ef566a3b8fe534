"""
Unit tests for the group law, the distance and ball measures
"""
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from czgrid.errors import DimensionMismatchError, InvalidPointError
from czgrid.geometry import (
    GroupPoint,
    ball_measure_closed_form,
    dist,
    dist_many,
    fit_growth_slopes,
    inv,
    mc_ball_measure,
    mul,
    offset_distance,
)

coordinate = st.floats(min_value=-5.0, max_value=5.0, allow_nan=False)
height = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False)
points = st.builds(lambda x, t: GroupPoint((x,), t), coordinate, height)


def _close(p: GroupPoint, q: GroupPoint, tol: float = 1e-12) -> bool:
    return all(math.isclose(a, b, abs_tol=tol) for a, b in zip(p.x, q.x)) and math.isclose(
        p.t, q.t, abs_tol=tol
    )


def _random_points(rng: np.random.Generator, count: int, n: int):
    xs = rng.uniform(-8.0, 8.0, size=(count, n))
    ts = rng.uniform(-3.0, 3.0, size=count)
    return [GroupPoint(tuple(x), t) for x, t in zip(xs, ts)]


class TestGroupLaw:
    """Tests for the product and the inverse"""

    def test_identity(self):
        """o · (3, 5) = (3, 5)"""
        assert mul(GroupPoint.identity(1), GroupPoint((3.0,), 5.0)) == GroupPoint((3.0,), 5.0)

    def test_product_at_t_zero(self):
        """(1, 0) · (2, 5) = (3, 5)"""
        assert mul(GroupPoint((1.0,), 0.0), GroupPoint((2.0,), 5.0)) == GroupPoint((3.0,), 5.0)

    def test_product_scales_by_exp_t(self):
        """(0, ln 2) · (3, 0) = (6, ln 2)"""
        p = mul(GroupPoint((0.0,), math.log(2)), GroupPoint((3.0,), 0.0))
        assert p.x[0] == pytest.approx(6.0)
        assert p.t == pytest.approx(math.log(2))

    def test_inverse(self):
        """inv((0, t)) = (0, −t), inv((x, 0)) = (−x, 0)"""
        assert inv(GroupPoint((0.0,), 2.5)) == GroupPoint((0.0,), -2.5)
        assert inv(GroupPoint((4.0, -1.0), 0.0)) == GroupPoint((-4.0, 1.0), 0.0)

    def test_inverse_cancels(self):
        """(4, 1) · inv((4, 1)) = o"""
        p = GroupPoint((4.0,), 1.0)
        assert _close(mul(p, inv(p)), GroupPoint.identity(1))

    @given(points, points, points)
    def test_associativity(self, a, b, c):
        """(a·b)·c = a·(b·c) to 1e-12 relative to the size of the terms"""
        scale = 1 + abs(a.x[0]) + math.exp(a.t) * abs(b.x[0]) + math.exp(a.t + b.t) * abs(c.x[0])
        assert _close(mul(mul(a, b), c), mul(a, mul(b, c)), tol=1e-12 * scale)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            mul(GroupPoint((0.0,), 0.0), GroupPoint((0.0, 0.0), 0.0))

    def test_non_finite_point(self):
        with pytest.raises(InvalidPointError):
            GroupPoint((float("nan"),), 0.0)
        with pytest.raises(InvalidPointError):
            GroupPoint((0.0,), float("inf"))
        with pytest.raises(InvalidPointError):
            GroupPoint((), 0.0)


class TestDistance:
    """Tests for the left-invariant distance"""

    @pytest.mark.parametrize("t", [-2.0, -0.3, 0.5, 4.0])
    def test_vertical_distance(self, t):
        """d(o, (0, t)) = |t|"""
        assert dist(GroupPoint.identity(1), GroupPoint((0.0,), t)) == pytest.approx(abs(t))

    @pytest.mark.parametrize("x", [0.1, 1.0, 7.5])
    def test_horizontal_distance(self, x):
        """d(o, (x, 0)) = arccosh(1 + x²/2)"""
        expected = math.acosh(1 + x * x / 2)
        assert dist(GroupPoint.identity(1), GroupPoint((x,), 0.0)) == pytest.approx(expected)

    def test_zero_on_diagonal(self):
        p = GroupPoint((1.5, -2.0), 0.7)
        assert dist(p, p) == 0.0

    @given(points, points, points)
    @settings(max_examples=200)
    def test_left_invariance(self, g, p, q):
        assert dist(mul(g, p), mul(g, q)) == pytest.approx(dist(p, q), rel=1e-6, abs=1e-6)

    @given(points, points)
    def test_symmetry(self, p, q):
        assert dist(p, q) == pytest.approx(dist(q, p), rel=1e-6, abs=1e-6)

    def test_dist_many_matches_dist(self):
        rng = np.random.default_rng(3)
        center = GroupPoint((0.5, -1.0), 0.3)
        xs = rng.uniform(-4, 4, size=(50, 2))
        ts = rng.uniform(-2, 2, size=50)
        expected = [dist(center, GroupPoint(tuple(x), t)) for x, t in zip(xs, ts)]
        np.testing.assert_allclose(dist_many(center, xs, ts), expected, rtol=1e-9, atol=1e-9)

    @given(points, points, points)
    @settings(max_examples=300)
    def test_triangle_inequality(self, p, w, q):
        assert dist(p, q) <= dist(p, w) + dist(w, q) + 1e-9

    def test_triangle_inequality_random_triples(self):
        """d(p, q) <= d(p, w) + d(w, q) on 10^3 seeded triples in R^2 ⋊ R"""
        rng = np.random.default_rng(11)
        ps, ws, qs = (_random_points(rng, 1000, 2) for _ in range(3))
        excess = max(dist(p, q) - dist(p, w) - dist(w, q) for p, w, q in zip(ps, ws, qs))
        assert excess <= 1e-9

    def test_nearby_points(self):
        """Tiny offsets keep full relative precision"""
        o = GroupPoint.identity(1)
        assert dist(o, GroupPoint((0.0,), 1e-8)) == pytest.approx(1e-8, rel=1e-9)
        assert dist(o, GroupPoint((2e-8,), 0.0)) == pytest.approx(2e-8, rel=1e-9)

    def test_far_apart_points_are_finite(self):
        """Vertical distance 800 and horizontal offset 1e150 stay finite"""
        o = GroupPoint.identity(1)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            vertical = dist(o, GroupPoint((0.0,), 800.0))
            horizontal = dist_many(o, np.array([[1e150], [1.0]]), np.array([0.0, 0.0]))
        assert vertical == pytest.approx(800.0, rel=1e-12)
        assert horizontal[0] == pytest.approx(2 * math.log(1e150), rel=1e-12)
        assert horizontal[1] == pytest.approx(math.acosh(1.5))
        assert np.all(np.isfinite(horizontal))

    def test_offset_distance_matches_dist(self):
        p, q = GroupPoint((1.0, 2.0), -0.5), GroupPoint((-3.0, 0.5), 1.25)
        diff_sq = (q.x[0] - p.x[0]) ** 2 + (q.x[1] - p.x[1]) ** 2
        assert float(offset_distance(diff_sq, p.t, q.t)) == pytest.approx(dist(p, q), rel=1e-12)

    def test_dist_many_shape_check(self):
        with pytest.raises(DimensionMismatchError):
            dist_many(GroupPoint.identity(2), np.zeros((3, 1)), np.zeros(3))


class TestBallMeasure:
    """Tests for Monte-Carlo ball measures"""

    def test_matches_closed_form_for_n1(self):
        estimate, stderr = mc_ball_measure(GroupPoint.identity(1), 1.0, 20000, seed=1)
        assert abs(estimate - ball_measure_closed_form(1.0)) <= 4 * stderr

    def test_left_translation_invariance(self):
        """ρ is right Haar; left translates of a ball have measure e^{n·t} times the original"""
        center = GroupPoint((3.0,), 0.5)
        base, base_err = mc_ball_measure(GroupPoint.identity(1), 0.8, 20000, seed=2)
        moved, moved_err = mc_ball_measure(center, 0.8, 20000, seed=2)
        assert moved / math.exp(0.5) == pytest.approx(base, abs=4 * (base_err + moved_err))

    def test_deterministic(self):
        a = mc_ball_measure(GroupPoint.identity(2), 0.5, 5000, seed=9)
        b = mc_ball_measure(GroupPoint.identity(2), 0.5, 5000, seed=9)
        assert a == b

    def test_small_radius_vanishes(self):
        estimates = [mc_ball_measure(GroupPoint.identity(1), r, 1000, seed=0)[0] for r in (1e-1, 1e-2, 1e-4)]
        assert estimates[0] > estimates[2]
        assert estimates[2] < 1e-3

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            mc_ball_measure(GroupPoint.identity(1), 1.0, 0, seed=0)
        with pytest.raises(ValueError):
            mc_ball_measure(GroupPoint.identity(1), 0.0, 10, seed=0)

    def test_growth_slopes_n1(self):
        """r^{n+1} for small r and e^{nr} for large r"""
        fit = fit_growth_slopes(1, 20000, seed=0)
        assert fit.small_slope == pytest.approx(2.0, abs=0.3)
        assert fit.large_slope == pytest.approx(1.0, abs=0.2)
        assert len(fit.small_estimates) == len(fit.small_radii)
