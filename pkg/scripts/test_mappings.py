"""
Tests for mapping descriptors, differentials and p-dilatation
"""

import math

import numpy as np
import pytest

from geometry.domains import BALL, ELLIPSOID, HOLDER_CUSP, ball, box, contains, holder_cusp, sample_points, simplex_h1
from mappings.maps import apply, cusp_map, diagonal_linear, differential, differential_batch, identity_map, image_domain
from mappings.dilatation import (
    ANALYTIC, FROBENIUS, PAPER_VARIANT, SAMPLED_SUP, admissible_a_range, bilipschitz_dilatation_bound,
    dilatation_sup, frobenius_bound_cusp, lipschitz_inverse_dilatation_bound, operator_norm,
    pointwise_dilatation, printed_frobenius_square,
)
from utils.errors import GeometryError, SingularPointError, UnboundedDilatationError, ValidityError

X0 = np.array([0.1, 0.1, 0.5])


def test_cusp_differential_matches_finite_differences():
    m = cusp_map(1.0 / 3.0, 2, 2)
    exact = differential(m, X0).matrix
    step = 1e-6
    numeric = np.empty((3, 3))
    for j in range(3):
        e = np.zeros(3)
        e[j] = step
        numeric[:, j] = (apply(m, X0 + e) - apply(m, X0 - e)) / (2 * step)
    assert np.allclose(exact, numeric, atol=1e-7)


def test_cusp_jacobian_is_the_determinant():
    m = cusp_map(0.4, 2, 3)
    data = differential(m, X0)
    assert data.det == pytest.approx(np.linalg.det(data.matrix), rel=1e-12)
    assert data.det == pytest.approx(0.4 * 0.5 ** (0.4 * 6 - 3), rel=1e-14)


def test_cusp_map_is_singular_on_the_base():
    with pytest.raises(SingularPointError):
        differential(cusp_map(0.3, 2, 2), [0.0, 0.0, 0.0])


def test_linear_differential_is_constant():
    mats, dets = differential_batch(diagonal_linear(2, 1), np.random.default_rng(0).random((5, 2)))
    assert np.array_equal(mats[3], np.diag([2.0, 1.0]))
    assert dets.tolist() == [2.0] * 5


def test_pointwise_cusp_dilatation_is_finite_positive():
    value = pointwise_dilatation(cusp_map(1.0 / 3.0, 2, 2), X0, 2.0)
    assert 0 < value < math.inf


def test_operator_norm_is_top_singular_value():
    mat = np.array([[3.0, 1.0], [0.0, 2.0]])
    assert operator_norm(mat) == pytest.approx(np.linalg.svd(mat, compute_uv=False)[0], rel=1e-12)


def test_diagonal_dilatation_powers_are_exact():
    report = dilatation_sup(diagonal_linear(2, 1), ball(2), 2.0)
    assert report.method == ANALYTIC
    assert report.value_pow == 2.0
    assert report.value == pytest.approx(math.sqrt(2.0))
    report = dilatation_sup(diagonal_linear(2, 1, 1), box(1, 1, 1), 3.0)
    assert report.value_pow == 4.0


def test_identity_dilatation_is_one():
    assert dilatation_sup(identity_map(3), simplex_h1(3), 2.0).value == 1.0


def test_cusp_dilatation_closed_form():
    a, g = 0.3, (2.0, 2.0)
    report = dilatation_sup(cusp_map(a, *g), simplex_h1(3), 2.0)
    assert report.norm_kind == FROBENIUS
    assert report.value_pow == pytest.approx(frobenius_bound_cusp(a, g, 3) ** 2 / a, rel=1e-14)


def test_cusp_dilatation_unbounded_beyond_upper_exponent():
    # 2(a-1) - (5a-3) < 0 for a > 1/3
    with pytest.raises(UnboundedDilatationError):
        dilatation_sup(cusp_map(0.5, 2, 2), simplex_h1(3), 2.0)


def test_sampled_witness_below_analytic_bound():
    m = cusp_map(1.0 / 3.0, 2, 2)
    report = dilatation_sup(m, simplex_h1(3), 2.0, method=SAMPLED_SUP, density=12)
    analytic = dilatation_sup(m, simplex_h1(3), 2.0)
    assert report.lower_witness_value <= analytic.value * (1 + 1e-12)
    assert report.frobenius_witness_value >= report.lower_witness_value
    assert report.value == analytic.value
    assert 0 < report.evaluations <= 100_000


def test_sampled_search_is_deterministic():
    m = cusp_map(0.3, 2, 2)
    r1 = dilatation_sup(m, simplex_h1(3), 2.0, method=SAMPLED_SUP, density=10)
    r2 = dilatation_sup(m, simplex_h1(3), 2.0, method=SAMPLED_SUP, density=10)
    assert r1.lower_witness_value == r2.lower_witness_value
    assert np.array_equal(r1.witness, r2.witness)


def test_sampled_search_in_six_dimensions_stays_in_budget():
    m = cusp_map(0.5, 1, 1, 1, 1, 1)
    report = dilatation_sup(m, simplex_h1(6), 2.0, method=SAMPLED_SUP, budget=60_000)
    analytic = dilatation_sup(m, simplex_h1(6), 2.0)
    assert 0 < report.evaluations <= 60_000
    assert contains(simplex_h1(6), report.witness[None, :]).all()
    assert 0 < report.lower_witness_value <= analytic.value * (1 + 1e-12)


def test_sampled_search_refines_within_the_remaining_budget():
    m = cusp_map(1.0 / 3.0, 2, 2)
    coarse = dilatation_sup(m, simplex_h1(3), 2.0, method=SAMPLED_SUP, density=12, rounds=0)
    refined = dilatation_sup(m, simplex_h1(3), 2.0, method=SAMPLED_SUP, density=12)
    assert refined.lower_witness_value >= coarse.lower_witness_value
    assert refined.evaluations > coarse.evaluations
    tight = dilatation_sup(m, simplex_h1(3), 2.0, method=SAMPLED_SUP, density=12, budget=1_000)
    assert tight.evaluations <= 1_000


def test_printed_constant_is_negative_for_g22():
    assert printed_frobenius_square(1.0 / 3.0, (2, 2)) == pytest.approx(-5.0 / 3.0, rel=1e-14)
    report = dilatation_sup(cusp_map(1.0 / 3.0, 2, 2), simplex_h1(3), 2.0, method=PAPER_VARIANT)
    assert not report.valid
    assert math.isnan(report.value)


def test_corrected_constant():
    assert frobenius_bound_cusp(1.0 / 3.0, (2, 2), 3) == pytest.approx(math.sqrt(7.0 / 3.0), rel=1e-14)


def test_admissible_range():
    rng = admissible_a_range(2.0, 4.0, 3, 5.0)
    assert rng.lower == pytest.approx(0.3)
    assert rng.upper == pytest.approx(1.0 / 3.0)
    assert not rng.empty
    assert admissible_a_range(2.0, 3.0, 3, 5.0).empty
    with pytest.raises(ValidityError):
        admissible_a_range(2.0, 4.0, 3, 2.0)


def test_lipschitz_dilatation_bounds():
    assert bilipschitz_dilatation_bound(2.0, 2.0, 2) == pytest.approx(4.0)
    assert lipschitz_inverse_dilatation_bound(2.0, 3.0, 3.0, 3) == pytest.approx(2.0)


def test_image_descriptors():
    assert image_domain(diagonal_linear(2, 1), ball(2)).kind == ELLIPSOID
    assert image_domain(diagonal_linear(2, 2), ball(2)).kind == BALL
    assert image_domain(diagonal_linear(3, 1), box(1, 1)) == box(3, 1)
    cusp = image_domain(cusp_map(0.3, 2, 2), simplex_h1(3))
    assert cusp.kind == HOLDER_CUSP and cusp.exponents == (2.0, 2.0)
    with pytest.raises(GeometryError):
        image_domain(cusp_map(0.3, 2, 2), box(1, 1, 1))
    with pytest.raises(GeometryError):
        image_domain(diagonal_linear(2, 1), ball(3))


def test_cusp_map_sends_simplex_into_cusp():
    pts = sample_points(simplex_h1(3), 10)
    assert contains(holder_cusp(2, 2), apply(cusp_map(0.4, 2, 2), pts)).all()


def test_mapping_validation():
    with pytest.raises(GeometryError):
        cusp_map(-1.0, 2, 2)
    with pytest.raises(GeometryError):
        diagonal_linear(1, 0)
