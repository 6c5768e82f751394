"""
Tests for domain descriptors and geometric quantities
"""

import math

import numpy as np
import pytest

from geometry.domains import (
    BOX, ball, bounding_box, box, contains, diameter, domain_from_dict, ellipsoid,
    equal_volume_ball_radius, holder_cusp, is_convex, monte_carlo_volume, polygon,
    sample_points, simplex_h1, unit_ball_volume, volume,
)
from utils.errors import GeometryError

L_SHAPE = [(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)]


def test_exact_volumes():
    assert volume(box(2, 3)) == 6.0
    assert volume(ball(3)) == pytest.approx(4.0 * math.pi / 3.0, rel=1e-15)
    assert volume(ellipsoid(2, 1)) == pytest.approx(2.0 * math.pi, rel=1e-15)
    assert volume(simplex_h1(3)) == pytest.approx(1.0 / 3.0)
    assert volume(holder_cusp(2, 2)) == pytest.approx(1.0 / 5.0)
    assert volume(polygon(L_SHAPE)) == pytest.approx(3.0)


@pytest.mark.parametrize("n", range(1, 9))
def test_unit_ball_volume_matches_gamma_formula(n):
    assert unit_ball_volume(n) == pytest.approx(math.pi ** (n / 2) / math.gamma(n / 2 + 1), rel=1e-14)


def test_diameters():
    assert diameter(box(3, 4)) == pytest.approx(5.0)
    assert diameter(ellipsoid(2, 1, 1)) == 4.0
    assert diameter(simplex_h1(3)) == pytest.approx(math.sqrt(3))
    assert diameter(polygon([(0, 0), (1, 0), (1, 1), (0, 1)])) == pytest.approx(math.sqrt(2))


def test_equal_volume_radius():
    assert equal_volume_ball_radius(ellipsoid(2, 1)) == pytest.approx(math.sqrt(2))
    assert equal_volume_ball_radius(ball(3, 2.5)) == 2.5


@pytest.mark.parametrize("build", [
    lambda: box(1, -1),
    lambda: ball(2, 0.0),
    lambda: holder_cusp(0.5, 2),
    lambda: polygon([(0, 0), (1, 1), (1, 0), (0, 1)]),
    lambda: polygon([(0, 0), (0, 1), (1, 1), (1, 0)]),
    lambda: ellipsoid(1, 2, math.inf),
])
def test_invalid_descriptors_rejected(build):
    with pytest.raises(GeometryError):
        build()


def test_membership_is_strict():
    sq = box(1, 1)
    assert contains(sq, [0.5, 0.5])
    assert not contains(sq, [0.0, 0.5])
    assert not contains(ball(2), [1.0, 0.0])
    assert not contains(polygon(L_SHAPE), [1.0, 1.5])
    assert not contains(polygon(L_SHAPE), [1.5, 1.5])
    assert contains(polygon(L_SHAPE), [0.5, 1.5])


def test_batch_membership_shape():
    pts = np.array([[0.5, 0.5], [2.0, 0.5], [0.1, 0.9]])
    assert contains(box(1, 1), pts).tolist() == [True, False, True]


def test_dimension_mismatch():
    with pytest.raises(GeometryError):
        contains(ball(3), [0.1, 0.2])


def test_unit_cusp_equals_simplex():
    rng = np.random.default_rng(7)
    pts = rng.random((20_000, 3))
    assert np.array_equal(contains(holder_cusp(1, 1), pts), contains(simplex_h1(3), pts))


def test_convexity():
    assert is_convex(box(1, 2))
    assert is_convex(simplex_h1(4))
    assert is_convex(holder_cusp(1, 1))
    assert not is_convex(holder_cusp(2, 2))
    assert not is_convex(polygon(L_SHAPE))
    assert is_convex(polygon([(0, 0), (1, 0), (1, 1), (0, 1)]))


def test_bounding_boxes():
    lo, hi = bounding_box(ellipsoid(2, 1))
    assert lo.tolist() == [-2.0, -1.0] and hi.tolist() == [2.0, 1.0]
    lo, hi = bounding_box(holder_cusp(2, 2))
    assert lo.tolist() == [0.0, 0.0, 0.0] and hi.tolist() == [1.0, 1.0, 1.0]


def test_box_sampling_is_a_full_grid():
    pts = sample_points(box(1, 2), 5)
    assert pts.shape == (25, 2)
    assert contains(box(1, 2), pts).all()


@pytest.mark.parametrize("d", [ball(2), ellipsoid(2, 1, 1), simplex_h1(3), holder_cusp(3, 2), polygon(L_SHAPE)])
def test_samples_lie_inside(d):
    pts = sample_points(d, 12)
    assert len(pts) >= 12
    assert contains(d, pts).all()


def test_cusp_samples_approach_the_tip():
    pts = sample_points(holder_cusp(2, 2), 16)
    assert pts[:, -1].min() < 1.0 / 16


def test_sampling_is_deterministic():
    assert np.array_equal(sample_points(holder_cusp(2, 2), 10), sample_points(holder_cusp(2, 2), 10))


def test_capped_sampling_spreads_over_the_whole_domain():
    d = simplex_h1(5)
    pts = sample_points(d, 24, max_points=100_000)
    assert len(pts) <= 100_000
    assert contains(d, pts).all()
    # a lexicographic prefix of the 24^5 grid would stop near x_1 = 1/16
    assert pts[:, 0].max() > 0.85


def test_capped_sampling_never_builds_the_full_grid():
    pts = sample_points(simplex_h1(6), 24, max_points=50_000)
    assert 0 < len(pts) <= 50_000
    assert contains(simplex_h1(6), pts).all()


def test_capped_sampling_is_seeded():
    d = holder_cusp(2, 2)
    first = sample_points(d, 64, max_points=5_000, seed=3)
    assert np.array_equal(first, sample_points(d, 64, max_points=5_000, seed=3))
    assert not np.array_equal(first, sample_points(d, 64, max_points=5_000, seed=4))


def test_cap_above_the_grid_size_keeps_the_full_grid():
    d = ball(2)
    assert np.array_equal(sample_points(d, 12, max_points=10_000), sample_points(d, 12))
    with pytest.raises(GeometryError):
        sample_points(d, 12, max_points=0)


def test_monte_carlo_volume_agrees_with_exact():
    est, err = monte_carlo_volume(holder_cusp(2, 2), samples=200_000)
    assert abs(est - 0.2) < 4 * err


def test_descriptor_from_dict():
    d = domain_from_dict({"kind": BOX, "sides": [3.0, 1.0]})
    assert d == box(3, 1)
    assert domain_from_dict(ball(3, 2.0).to_dict()) == ball(3, 2.0)
    with pytest.raises(GeometryError):
        domain_from_dict({"kind": "Torus"})
    with pytest.raises(GeometryError):
        domain_from_dict({"kind": BOX, "dim": 3, "sides": [1.0, 1.0]})


def test_labels_are_stable():
    assert box(3, 1).label() == "Box(3,1)"
    assert holder_cusp(2, 2).label() == "HolderCusp(g=2,2)"
    assert simplex_h1(3).gamma == 3.0
    assert holder_cusp(2, 2).gamma == 5.0
