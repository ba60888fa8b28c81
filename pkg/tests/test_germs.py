import numpy as np
import pytest

from crosscap.errors import DomainError, UsageError
from crosscap.germs import (
    MODEL_CROSS_CAP,
    MODEL_S1_PLUS,
    MapGerm,
    admissibility_check,
    null_vector,
    parse_expr,
    print_expr,
    rank_at,
)
from crosscap.jets import Jet, jet_sqrt


# -- parsing ---------------------------------------------------------------------


def test_parse_model_deformations():
    f = MapGerm.parse(MODEL_S1_PLUS)
    assert f.kind == "deformation"
    assert np.allclose(f.evaluate((0.2, 0.3, -0.1)), [0.2, 0.09, 0.3 * (0.04 + 0.09) - 0.03])

    g = MapGerm.parse(MODEL_CROSS_CAP)
    assert g.kind == "germ"
    assert np.allclose(g.evaluate((2.0, 3.0)), [2.0, 6.0, 9.0])


def test_parse_example_germ_newline_and_comments():
    src = """
    # third component carries the deformation
    u
    v^2
    v^3 - v*s^2 + u^2*v
    """
    f = MapGerm.parse(src)
    assert f.kind == "deformation"
    assert np.allclose(f.evaluate((1.0, 1.0, 2.0)), [1.0, 1.0, 1.0 - 4.0 + 1.0])


def test_parse_print_round_trip():
    samples = [
        "u + v*s - 3.5",
        "1/2*u^2 - (u - v)*(u + v)",
        "-u^3 + sqrt(1 + v)/(2 - s)",
        "u - -v",
        "2/3 + v^-2",
    ]
    for text in samples:
        ast = parse_expr(text)
        printed = print_expr(ast)
        assert parse_expr(printed) == ast, text


def test_parse_errors_carry_location():
    with pytest.raises(UsageError, match="line 1, col 5"):
        parse_expr("u + @")
    with pytest.raises(UsageError, match="unknown identifier 'w'"):
        parse_expr("u + w")
    with pytest.raises(UsageError, match="three component"):
        MapGerm.parse("u; v^2")
    with pytest.raises(UsageError, match="integer literal"):
        parse_expr("u^v")


def test_germ_cannot_reference_parameter():
    with pytest.raises(UsageError):
        MapGerm.parse("u; v; s", kind="germ")


# -- jets of germs ------------------------------------------------------------------


def test_jet_at_polynomial_exact():
    f = MapGerm.parse("u; v^2; u^2*v + v^3")
    jx, jy, jz = f.jet_at((0.0, 0.0), 3)
    assert jx.c[1, 0] == 1.0
    assert jy.c[0, 2] == 1.0
    assert jz.c[2, 1] == 1.0 and jz.c[0, 3] == 1.0


def test_jet_at_constant_shift_vanishes():
    f = MapGerm.parse("u - 1; v^2 - 4; (u - 1)*(v - 2)")
    jets = f.jet_at((1.0, 2.0), 3)
    for j in jets:
        assert abs(j.c[0, 0]) <= 1e-12


def test_jet_at_matches_finite_differences():
    f = MapGerm.parse("u + u*v; v^2 - u^3; u^2*v + v^3 - u*v")
    p = (0.3, -0.2)
    jets = f.jet_at(p, 3)
    h = 1e-5

    def num(i, pt):
        return f.evaluate(pt)[i]

    for i in range(3):
        du = (num(i, (p[0] + h, p[1])) - num(i, (p[0] - h, p[1]))) / (2 * h)
        dv = (num(i, (p[0], p[1] + h)) - num(i, (p[0], p[1] - h))) / (2 * h)
        duu = (
            num(i, (p[0] + h, p[1])) - 2 * num(i, p) + num(i, (p[0] - h, p[1]))
        ) / h**2
        duv = (
            num(i, (p[0] + h, p[1] + h))
            - num(i, (p[0] + h, p[1] - h))
            - num(i, (p[0] - h, p[1] + h))
            + num(i, (p[0] - h, p[1] - h))
        ) / (4 * h**2)
        assert abs(jets[i].deriv0((1, 0)) - du) <= 1e-6
        assert abs(jets[i].deriv0((0, 1)) - dv) <= 1e-6
        assert abs(jets[i].deriv0((2, 0)) - duu) <= 1e-6
        assert abs(jets[i].deriv0((1, 1)) - duv) <= 1e-6


def test_jet_at_sqrt_matches_jet_sqrt():
    f = MapGerm.parse("sqrt(1 + u); v; u*v")
    jx = f.jet_at((0.0, 0.0), 6)[0]
    expect = jet_sqrt(1 + Jet.variable(0, 2, 6))
    assert np.max(np.abs(jx.c - expect.c)) <= 1e-12


def test_evaluate_domain_errors():
    f = MapGerm.parse("sqrt(u); v; 1/v")
    with pytest.raises(DomainError):
        f.evaluate((-1.0, 1.0))
    with pytest.raises(DomainError):
        f.evaluate((1.0, 0.0))


def test_at_parameter():
    f = MapGerm.parse(MODEL_S1_PLUS)
    g = f.at_parameter(-1.0)
    assert g.kind == "germ"
    assert np.allclose(g.evaluate((1.0, 0.5)), f.evaluate((1.0, 0.5, -1.0)))


# -- rank and null vector -------------------------------------------------------------


def test_rank_and_null_at_s1_point(s1_plus):
    g = s1_plus.at_parameter(0.0)
    assert rank_at(g, (0.0, 0.0)) == 1
    assert np.allclose(null_vector(g, (0.0, 0.0)), [0.0, 1.0])


def test_rank_immersed_point():
    g = MapGerm.parse("u; v; 0")
    assert rank_at(g, (0.0, 0.0)) == 2
    with pytest.raises(DomainError):
        null_vector(g, (0.0, 0.0))


def test_rank_and_null_off_origin(s1_plus):
    g = s1_plus.at_parameter(-1.0)
    assert rank_at(g, (1.0, 0.0)) == 1
    assert np.allclose(null_vector(g, (1.0, 0.0)), [0.0, 1.0])


# -- admissibility -----------------------------------------------------------------


def test_models_admissible(s1_plus, s1_minus):
    examples = [
        s1_plus,
        s1_minus,
        MapGerm.parse("u; -u^2 + v^2; u^2 + v^3 + v*s + u^2*v"),
        MapGerm.parse("u; v^2; v^3 - v*s^2 + u^2*v"),
        MapGerm.parse("u; v^2 + u*s; u^2 + v^3 + u^2*v + v*s"),
    ]
    for f in examples:
        report = admissibility_check(f)
        assert report.passed, report


def test_no_quadratic_normal_part_fails():
    f = MapGerm.parse("u; v^3; 0", kind="deformation")
    report = admissibility_check(f)
    assert not report.passed
    assert [c.name for c in report.failing()] == ["quadratic_normal_part"]


def test_example_with_empty_locus_still_admissible():
    # singular locus is empty for s != 0 here; that is flagged downstream,
    # not by the admissibility check
    f = MapGerm.parse("u; -u^2 + v^2; u^2 + v^3 + v*s^2 + u^2*v")
    report = admissibility_check(f)
    assert report.passed


def test_moving_base_curve_fails():
    f = MapGerm.parse("u; v^2 + s; u^2*v + v^3")
    report = admissibility_check(f)
    assert not report.passed
    assert [c.name for c in report.failing()] == ["parameter_axis_fixed"]


def test_admissibility_requires_deformation():
    with pytest.raises(UsageError):
        admissibility_check(MapGerm.parse(MODEL_CROSS_CAP))
