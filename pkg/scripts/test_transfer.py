"""
Tests for transfer bounds, the cusp optimisation, route selection and certificates
"""

import math

import numpy as np
import pytest

from geometry.domains import ball, box, ellipsoid, holder_cusp, simplex_h1
from mappings.dilatation import dilatation_sup
from mappings.maps import cusp_map, diagonal_linear
from constants.jacobian_norms import m_rs
from constants.poincare import convex_poincare_bound, p_base_eigenvalue
from transfer.certificates import (
    CSV_COLUMNS, LOWER, PAPER_PRINTED, PAYNE_WEINBERGER, P_LAPLACE_PP, SZEGO_WEINBERGER, THEOREM_A,
    THEOREM_B, THEOREM_C, UPPER, BoundCertificate, certificate_to_text, write_certificates,
)
from transfer.pipeline import PipelineOptions, auto_pipeline, classical_certificates, classical_comparison
from transfer.theorem_b import default_r_grid, theorem_b_bound, theorem_b_objective, theorem_b_scan
from transfer.theorems import p_laplace_rp_bound, theorem_a_bound, theorem_c_bound
from utils.errors import DivergentIntegralError, InapplicableRouteError, ValidityError

J11_PRIME = 1.8411837813406593


def test_rectangle_bound_is_exact():
    cert = auto_pipeline(box(1, 1), diagonal_linear(3, 1))
    assert cert.method == THEOREM_A
    assert cert.direction == LOWER
    assert cert.bound_value == math.pi ** 2 / 9
    assert cert.ledger["K_pow"] == 3.0
    assert cert.ledger["M_pow"] == 3.0


def test_ellipse_interval():
    cert = auto_pipeline(ball(2), diagonal_linear(2, 1))
    assert cert.target_domain == ellipsoid(2, 1)
    assert cert.bound_value == pytest.approx(J11_PRIME ** 2 / 4, rel=1e-12)
    assert cert.upper_bound == pytest.approx(J11_PRIME ** 2 / 2, rel=1e-12)
    assert cert.ledger["payne_weinberger"] == pytest.approx(math.pi ** 2 / 16)
    comparison = classical_comparison(cert)
    assert comparison["better"]
    assert comparison["ratio"] == pytest.approx(4 * J11_PRIME ** 2 / math.pi ** 2, rel=1e-12)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
@pytest.mark.parametrize("source", [box(1, 1, 1), ball(3)])
def test_p_laplace_linear_stretch(p, source):
    cert = auto_pipeline(source, diagonal_linear(2, 1, 1), p=p)
    base = p_base_eigenvalue(source, p).value
    assert cert.bound_value == pytest.approx(base / 2 ** p, rel=1e-12)
    if p != 2:
        assert cert.method == P_LAPLACE_PP


def test_pp_formula_rejects_non_positive_constants():
    with pytest.raises(ValidityError):
        theorem_a_bound(0.0, 1.0, 1.0)
    with pytest.raises(DivergentIntegralError):
        p_laplace_rp_bound(1.0, math.inf, 1.0, 2.0)


def test_rp_formula_examples():
    assert theorem_c_bound(1.0, 1.0, 1.0).bound_value == 1.0
    assert theorem_c_bound(2.0, 1.0, 1.0).bound_value == 0.25
    assert p_laplace_rp_bound(1.0, 1.0, 1.0, 3.0).bound_value == 1.0
    cert = theorem_c_bound(1.5, 0.8, 2.5)
    assert cert.method == THEOREM_C
    assert cert.bound_value == pytest.approx(3.0 ** -2, rel=1e-12)
    assert cert.bound_value == p_laplace_rp_bound(1.5, 0.8, 2.5, 2.0).bound_value
    with pytest.raises(DivergentIntegralError):
        theorem_c_bound(1.0, math.inf, 1.0)
    with pytest.raises(ValidityError):
        theorem_c_bound(1.0, 1.0, 0.0)


def test_rp_formula_on_a_fixed_cusp():
    source, mapping, r = simplex_h1(3), cusp_map(0.32, 2, 2), 4.0
    k = dilatation_sup(mapping, source, 2.0).value
    m = m_rs(mapping, source, r, 2.0).value
    b = convex_poincare_bound(source, r, 2.0).value
    cert = theorem_c_bound(k, m, b)
    assert 0 < cert.bound_value < math.inf
    assert cert.bound_value == pytest.approx((k * m * b) ** -2, rel=1e-12)
    assert cert.ledger["M"] == m


@pytest.mark.parametrize("t", [0.5, 2.0, 3.0])
def test_uniform_dilation_scales_the_bound(t):
    base = auto_pipeline(box(1, 1), diagonal_linear(1, 1)).bound_value
    scaled = auto_pipeline(box(1, 1), diagonal_linear(t, t)).bound_value
    assert base == pytest.approx(math.pi ** 2, rel=1e-14)
    assert scaled * t ** 2 == pytest.approx(base, rel=1e-14)


@pytest.mark.parametrize("source, mapping", [
    (box(1, 1), diagonal_linear(3, 1)),
    (ball(2), diagonal_linear(2, 1)),
    (box(1, 1, 1), diagonal_linear(2, 1, 1)),
])
def test_sup_route_beats_the_integral_route(source, mapping):
    sup_cert = auto_pipeline(source, mapping)
    assert sup_cert.method == THEOREM_A
    n = source.dim
    for r in (2.5, 3.0, 2 * n / (n - 2) - 0.1 if n > 2 else 8.0):
        m = m_rs(mapping, source, r, 2.0).value
        b = convex_poincare_bound(source, r, 2.0).value
        assert sup_cert.bound_value >= theorem_c_bound(sup_cert.ledger["K"], m, b).bound_value


def test_cusp_bound_is_finite():
    cert = theorem_b_bound(3, (2.0, 2.0))
    assert cert.method == THEOREM_B
    assert 0 < cert.bound_value < math.inf
    assert cert.ledger["r"] > 3.6
    assert 0.3 < cert.ledger["a"] <= 1.0 / 3.0 + 1e-12


def test_cusp_bound_decreases_with_sharper_cusps():
    values = [theorem_b_bound(3, (g, g)).bound_value for g in (1.5, 2.0, 3.0, 4.0)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_simplex_exponents_give_a_finite_bound():
    cert = theorem_b_bound(3, (1.0, 1.0))
    assert math.isfinite(cert.bound_value)


def test_simplex_exponents_stay_finite_up_to_six_dimensions():
    values = [theorem_b_bound(n, (1.0,) * (n - 1)).bound_value for n in range(3, 7)]
    assert all(0 < v < math.inf for v in values)
    assert all(a > b for a, b in zip(values, values[1:]))
    assert values == pytest.approx([4.22e-4, 1.11e-5, 3.41e-7, 1.17e-8], rel=5e-2)


@pytest.mark.parametrize("smaller, larger", [
    ((2.0, 2.0), (3.0, 2.0)),
    ((2.0, 2.0), (2.0, 3.0)),
    ((3.0, 2.0), (3.0, 3.0)),
    ((2.0, 3.0), (2.0, 4.0)),
])
def test_enlarging_one_exponent_never_raises_the_bound(smaller, larger):
    r_grid = [5.5]
    assert theorem_b_bound(3, larger, r_grid).bound_value <= theorem_b_bound(3, smaller, r_grid).bound_value


def test_printed_variant_is_invalid_for_g22():
    points = theorem_b_scan(3, (2.0, 2.0), variant=PAPER_PRINTED)
    nonempty = [pt for pt in points if pt.lower < pt.upper]
    assert nonempty
    assert all(pt.invalid_points == 64 and not pt.valid for pt in nonempty)
    assert all(pt.min_printed_square < 0 for pt in nonempty)
    with pytest.raises(InapplicableRouteError):
        theorem_b_bound(3, (2.0, 2.0), variant=PAPER_PRINTED)


def test_a_optimisation_beats_a_fine_grid():
    r = 5.0
    point = theorem_b_scan(3, (2.0, 2.0), [r])[0]
    grid = np.linspace(point.lower + 1e-6, point.upper, 1024)
    best = max(theorem_b_objective(float(a), r, 3, (2.0, 2.0), point.B) for a in grid)
    assert point.valid
    assert point.value >= best * (1 - 1e-9)


def test_cusp_scan_rejects_bad_grids():
    with pytest.raises(ValidityError):
        theorem_b_scan(3, (2.0, 2.0), [7.0])
    with pytest.raises(ValidityError):
        theorem_b_scan(2, (2.0,))
    with pytest.raises(ValidityError):
        theorem_b_objective(0.3, 5.0, 3, (2.0, 2.0), 1.0, variant="other")


def test_fixed_exponent_cusp_uses_the_rp_route():
    cert = auto_pipeline(simplex_h1(3), cusp_map(0.32, 2, 2))
    assert cert.method == THEOREM_C
    # M_{r,2} is finite only for r > n s / (a gamma) = 3.75
    assert cert.ledger["r"] > 3.75
    assert cert.ledger["a"] == 0.32
    assert "payne_weinberger" not in cert.ledger


def test_optimised_cusp_through_the_pipeline():
    opts = PipelineOptions(optimize_a=True)
    cert = auto_pipeline(simplex_h1(3), cusp_map(0.32, 2, 2), options=opts)
    assert cert.method == THEOREM_B
    assert cert.bound_value >= auto_pipeline(simplex_h1(3), cusp_map(0.32, 2, 2)).bound_value * (1 - 1e-9)


def test_unbounded_dilatation_is_inapplicable():
    with pytest.raises(InapplicableRouteError):
        auto_pipeline(simplex_h1(3), cusp_map(0.5, 2, 2))


def test_options_from_config_ignore_unknown_keys():
    opts = PipelineOptions.from_config({"a_grid_points": 32, "eig_tol": 1e-8}, optimize_a=True, mu_base=None)
    assert opts.a_grid_points == 32
    assert opts.optimize_a
    assert opts.mu_base is None


def test_default_r_grid():
    grid = default_r_grid(3)
    assert len(grid) == 16
    assert grid[0] == pytest.approx(2.001)
    assert grid[-1] == pytest.approx(5.999)
    assert grid == sorted(grid)
    assert default_r_grid(3, p=3.0)[-1] == pytest.approx(64.0)
    with pytest.raises(ValidityError):
        default_r_grid(3, points=0)


def test_certificate_validation():
    with pytest.raises(ValidityError):
        BoundCertificate(None, -1.0, LOWER, THEOREM_A)
    with pytest.raises(ValidityError):
        BoundCertificate(None, 1.0, LOWER, THEOREM_A, {"K": math.inf})


def test_csv_output_is_deterministic():
    certs = [auto_pipeline(box(1, 1), diagonal_linear(3, 1)), auto_pipeline(ball(2), diagonal_linear(2, 1))]
    first = write_certificates(certs)
    second = write_certificates(certs)
    assert first == second
    lines = first.splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[1].startswith('"Box(3,1)",theorem-A,rigorous,')
    assert len(lines) == 3


def test_text_output(tmp_path):
    cert = auto_pipeline(box(1, 1), diagonal_linear(3, 1))
    out = tmp_path / "rect.txt"
    write_certificates([cert], out, fmt="text")
    text = out.read_text(encoding="utf-8")
    assert "method=theorem-A" in text
    assert f"bound={math.pi ** 2 / 9!r}" in text
    assert text == certificate_to_text(cert)
    with pytest.raises(ValidityError):
        write_certificates([cert], fmt="xml")


def test_classical_interval_certificates():
    lower, upper = classical_certificates(ellipsoid(2, 1))
    assert (lower.method, lower.direction) == (PAYNE_WEINBERGER, LOWER)
    assert (upper.method, upper.direction) == (SZEGO_WEINBERGER, UPPER)
    assert lower.bound_value == pytest.approx(math.pi ** 2 / 16)
    assert upper.bound_value == pytest.approx(J11_PRIME ** 2 / 2, rel=1e-12)
    assert lower.ledger["diameter"] == 4.0
    assert upper.ledger["ball_radius"] == pytest.approx(math.sqrt(2.0))
    transfer = auto_pipeline(ball(2), diagonal_linear(2, 1))
    assert lower.bound_value < transfer.bound_value < upper.bound_value


def test_non_convex_targets_get_only_the_upper_certificate():
    certs = classical_certificates(holder_cusp(2, 2))
    assert [c.method for c in certs] == [SZEGO_WEINBERGER]
    assert certs[0].bound_value > theorem_b_bound(3, (2.0, 2.0)).bound_value
