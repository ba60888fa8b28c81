import math

import numpy as np
import pytest

from conftest import compose_poly_1var, random_jet
from crosscap.errors import DegeneracyError, DomainError, UsageError
from crosscap.jets import (
    Jet,
    branch_solve,
    implicit_solve,
    invert_series,
    jet_recip,
    jet_sqrt,
    map_invert,
)

REL = 1e-12


def rel_close(a, b, tol=REL):
    scale = max(a.max_abs(), b.max_abs(), 1.0)
    return np.max(np.abs(a.c - b.c)) <= tol * scale


# -- arithmetic -----------------------------------------------------------------


def test_product_of_conjugates_is_difference_of_squares():
    u = Jet.variable(0, 1, 3)
    prod = (1 + u) * (1 - u)
    assert np.allclose(prod.c, [1.0, 0.0, -1.0, 0.0])


def test_additive_identity(rng):
    a = random_jet(rng, 3, 8)
    assert rel_close(a + Jet.zeros(3, 8), a)
    assert rel_close(a + 0.0, a)


def test_square_of_sum():
    u, v = Jet.coordinates(2, 2)
    q = (u + v) * (u + v)
    expect = Jet.zeros(2, 2)
    expect.c[2, 0] = 1.0
    expect.c[1, 1] = 2.0
    expect.c[0, 2] = 1.0
    assert np.allclose(q.c, expect.c)


def test_arity_mismatch_rejected():
    with pytest.raises(UsageError):
        Jet.variable(0, 2, 3) + Jet.variable(0, 3, 3)
    with pytest.raises(UsageError):
        Jet.variable(0, 2, 3) * Jet.variable(0, 2, 4)


def test_ring_laws_random(rng):
    for _ in range(25):
        a = random_jet(rng, 3, 8)
        b = random_jet(rng, 3, 8)
        c = random_jet(rng, 3, 8)
        assert rel_close((a + b) + c, a + (b + c))
        assert rel_close(a * b, b * a)
        assert rel_close(a * (b + c), a * b + a * c)
        assert rel_close((a * b) * c, a * (b * c))


# -- partial derivatives ----------------------------------------------------------


def test_partial_examples():
    u, v = Jet.coordinates(2, 3)
    m = u * u * v
    du = m.partial(0)
    assert du.c[1, 1] == 2.0 and np.count_nonzero(du.c) == 1
    const = Jet.constant(7.0, 2, 3)
    assert const.partial(1).max_abs() == 0.0

    u3, v3, s3 = Jet.coordinates(3, 3)
    f24 = Jet.constant(1.0, 3, 3)
    term = u3 * s3 * f24
    ds = term.partial(2)
    assert np.allclose(ds.c, u3.c)


def test_partial_out_of_range():
    with pytest.raises(UsageError):
        Jet.variable(0, 2, 3).partial(2)


def test_leibniz_rule(rng):
    order = 8
    for _ in range(10):
        a = random_jet(rng, 3, order)
        b = random_jet(rng, 3, order)
        for var in range(3):
            lhs = (a * b).partial(var)
            rhs = a.partial(var) * b + a * b.partial(var)
            # contents beyond order-1 are truncation artifacts of the rule
            diff = lhs - rhs
            mask = np.zeros_like(diff.c)
            for idx in np.ndindex(*diff.c.shape):
                if sum(idx) <= order - 1:
                    mask[idx] = 1.0
            scale = max(lhs.max_abs(), rhs.max_abs(), 1.0)
            assert np.max(np.abs(diff.c * mask)) <= REL * scale


# -- composition ------------------------------------------------------------------


def test_compose_shift():
    outer = Jet.variable(0, 1, 2) * Jet.variable(0, 1, 2)  # u^2
    u, v = Jet.coordinates(2, 2)
    res = outer.compose([u + v])
    assert np.allclose(res.c, ((u + v) * (u + v)).c)


def test_compose_identity(rng):
    a = random_jet(rng, 3, 6)
    res = a.compose(list(Jet.coordinates(3, 6)))
    assert rel_close(res, a)


def test_compose_linear_shear():
    outer = Jet.variable(0, 2, 3)  # picks out the first slot
    u, v = Jet.coordinates(2, 3)
    res = outer.compose([v + 0.5 * u, u])
    assert np.allclose(res.c, (v + 0.5 * u).c)


def test_compose_rejects_constant_terms():
    outer = Jet.variable(0, 1, 3)
    bad = Jet.constant(1.0, 1, 3)
    with pytest.raises(UsageError):
        outer.compose([bad])


# -- sqrt / recip ------------------------------------------------------------------


def test_sqrt_series_and_square_back(rng):
    a = 1 + 2 * Jet.variable(0, 1, 2)
    r = jet_sqrt(a)
    assert np.allclose(r.c, [1.0, 1.0, -0.5])
    for _ in range(10):
        b = random_jet(rng, 3, 8, scale=0.4) + 1.5
        rb = jet_sqrt(b)
        assert rel_close(rb * rb, b)


def test_sqrt_constant():
    r = jet_sqrt(Jet.constant(4.0, 2, 4))
    assert r.c[0, 0] == 2.0 and np.count_nonzero(r.c) == 1


def test_sqrt_domain_error():
    with pytest.raises(DomainError):
        jet_sqrt(Jet.variable(0, 2, 4))  # zero constant term
    with pytest.raises(DomainError):
        jet_sqrt(Jet.constant(-1.0, 2, 4))


def test_recip_geometric_series(rng):
    u = Jet.variable(0, 1, 3)
    r = jet_recip(1 - u)
    assert np.allclose(r.c, [1.0, 1.0, 1.0, 1.0])
    for _ in range(10):
        b = random_jet(rng, 2, 8, scale=0.4) - 1.7
        assert rel_close(jet_recip(b) * b, Jet.constant(1.0, 2, 8))
    with pytest.raises(DomainError):
        jet_recip(Jet.variable(1, 2, 8))


# -- implicit solve ----------------------------------------------------------------


def lam_from(expr_coeffs):
    lam = Jet.zeros(3, 8)
    for idx, val in expr_coeffs.items():
        lam.c[idx] = val
    return lam


def test_implicit_solve_linear():
    lam = lam_from({(0, 1, 0): 2.0, (1, 0, 0): 1.0})  # 2v + u
    sigma = implicit_solve(lam)
    assert abs(sigma.c[1, 0] + 0.5) <= REL
    assert np.count_nonzero(np.abs(sigma.c) > REL) == 1


def test_implicit_solve_trivial():
    sigma = implicit_solve(lam_from({(0, 1, 0): 2.0}))
    assert sigma.max_abs() <= REL


def test_implicit_solve_quadratic_residual(rng):
    lam = lam_from({(0, 1, 0): 2.0, (2, 0, 0): 1.0, (1, 0, 1): 1.0})
    sigma = implicit_solve(lam)
    assert abs(sigma.c[2, 0] + 0.5) <= REL and abs(sigma.c[1, 1] + 0.5) <= REL
    # residual lam(u, sigma, s) vanishes to order N
    u2, s2 = Jet.coordinates(2, 8)
    res = lam.compose([u2, sigma, s2])
    assert res.max_abs() <= REL
    # a generic random solvable case
    lam2 = random_jet(rng, 3, 8, scale=0.3)
    lam2.c[0, 0, 0] = 0.0
    lam2.c[0, 1, 0] = 1.3
    res2 = lam2.compose([u2, implicit_solve(lam2), s2])
    assert res2.max_abs() <= REL * (1 + lam2.max_abs())


def test_implicit_solve_degenerate():
    with pytest.raises(DegeneracyError):
        implicit_solve(lam_from({(1, 0, 0): 1.0}))  # d lam / dv = 0


# -- map inversion -----------------------------------------------------------------


def test_map_invert_scaling():
    u3, v3, s3 = Jet.coordinates(3, 8)
    _, W, _ = map_invert((u3, 2 * v3, s3))
    assert abs(W.c[0, 1, 0] - 0.5) <= REL


def test_map_invert_identity():
    u3, v3, s3 = Jet.coordinates(3, 8)
    _, W, _ = map_invert((u3, v3, s3))
    assert rel_close(W, v3)


def test_map_invert_two_sided(rng):
    u3, v3, s3 = Jet.coordinates(3, 8)
    V = v3 * (1 + u3)
    _, W, _ = map_invert((u3, V, s3))
    # v(1 - u + u^2 - ...) is the expected inverse second component
    geom = v3 * jet_recip(1 + u3)
    assert rel_close(W, geom)
    assert rel_close(V.compose([u3, W, s3]), v3)
    assert rel_close(W.compose([u3, V, s3]), v3)
    # random perturbation with unit v-derivative
    V2 = v3 + random_jet(rng, 3, 8, scale=0.2) * (v3 * v3)
    _, W2, _ = map_invert((u3, V2, s3))
    assert rel_close(V2.compose([u3, W2, s3]), v3, tol=1e-11)


def test_map_invert_shape_errors():
    u3, v3, s3 = Jet.coordinates(3, 8)
    with pytest.raises(UsageError):
        map_invert((v3, v3, s3))
    with pytest.raises(DegeneracyError):
        map_invert((u3, v3 * v3, s3))  # zero v-derivative


def test_invert_series_round_trip():
    t = Jet.variable(0, 1, 8)
    h = 2 * t + t * t
    hinv = invert_series(h)
    assert rel_close(h.compose([hinv]), t)


# -- branch solve ------------------------------------------------------------------


def branch_F(entries, order=8):
    F = Jet.zeros(2, order)
    for idx, val in entries.items():
        F.c[idx] = val
    return F


def test_branch_solve_exact_line():
    F = branch_F({(0, 2): -1.0, (2, 0): 1.0})
    alphas = branch_solve(F)
    assert abs(alphas[0] - 1.0) <= REL
    assert np.max(np.abs(alphas[1:])) <= REL


def test_branch_solve_cubic_term():
    F = branch_F({(0, 2): -1.0, (2, 0): 1.0, (3, 0): 1.0})
    alphas = branch_solve(F)
    assert abs(alphas[0] - 1.0) <= REL
    assert abs(alphas[1] + 0.5) <= REL
    assert abs(alphas[2] - 0.625) <= REL  # +5/8, from the residual oracle
    residual = compose_poly_1var(F.c, alphas, 8)
    assert np.max(np.abs(residual[: 8 + 1])) <= 1e-10


def test_branch_solve_parameter_coupling():
    m = 0.7
    # -t^2 + (1 + m (-t^2)) u^2
    F = branch_F({(0, 2): -1.0, (2, 0): 1.0, (2, 2): -m})
    alphas = branch_solve(F)
    assert abs(alphas[0] - 1.0) <= REL
    assert abs(alphas[1]) <= REL
    assert abs(alphas[2] - m / 2.0) <= REL
    residual = compose_poly_1var(F.c, alphas, 8)
    assert np.max(np.abs(residual[: 8 + 1])) <= 1e-10


def test_branch_solve_degenerate():
    with pytest.raises(DegeneracyError):
        branch_solve(branch_F({(0, 2): -1.0}))  # no u^2 part
    with pytest.raises(DegeneracyError):
        branch_solve(branch_F({(0, 2): -1.0, (2, 0): 1.0, (1, 0): 0.5}))


# -- monomial division ---------------------------------------------------------------


def test_divide_monomial():
    u3, v3, s3 = Jet.coordinates(3, 6)
    j = u3 * u3 * (1 + v3 + s3)
    q = j.divide_monomial((2, 0, 0))
    assert rel_close(q, 1 + v3 + s3)
    with pytest.raises(DegeneracyError):
        (u3 + v3).divide_monomial((1, 1, 0))


def test_eval_and_subs():
    u3, v3, s3 = Jet.coordinates(3, 4)
    j = u3 * u3 + 3 * v3 * s3 + 2
    assert math.isclose(j.eval((0.5, 2.0, -1.0)), 0.25 - 6.0 + 2.0)
    js = j.subs(2, -1.0)
    assert js.nvars == 2
    assert math.isclose(js.eval((0.5, 2.0)), 0.25 - 6.0 + 2.0)
