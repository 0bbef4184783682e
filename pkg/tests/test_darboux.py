import itertools

import numpy as np
import pytest

from darbouxspec.darboux import (GAUDIN_MATRIX, OKAMOTO_MATRIX, DarbouxKind, DarbouxParams,
                                 GaudinData, Reducibility, adjoint_accessory_shift,
                                 algebraic_adjoint, build_operator, classify, gaudin_accessory,
                                 gaudin_exponents, gaudin_oper, gaudin_to_darboux, lame_params,
                                 mu1_from_accessory, okamoto_dual, params_from_json,
                                 read_exponents, reducibility_locus)
from darbouxspec.errors import ConfigError, ConstraintViolated, DegeneratePosition
from darbouxspec.monodromy import MonodromyConfig, compute_monodromy

CFG = MonodromyConfig(independent_infinity=False)


# -- classification -----------------------------------------------------------

@pytest.mark.parametrize("P, kind", [
    ([0, 0, 1], DarbouxKind.REDUCIBLE),
    ([-1, 0, 1], DarbouxKind.TRIGONOMETRIC),
    (np.polynomial.polynomial.polyfromroots([0, 0.3 + 0.1j, 1]), DarbouxKind.ELLIPTIC),
    ([0, 0, 0, 1], DarbouxKind.CONFLUENT),
    ([0, 1], DarbouxKind.CONFLUENT),
])
def test_classify(P, kind):
    assert classify(P) is kind


def test_classify_is_moebius_invariant():
    # z (z - 1) has two simple zeros and a double point at infinity
    assert classify([0, -1, 1]) is DarbouxKind.TRIGONOMETRIC


# -- construction ---------------------------------------------------------------

def test_roundtrip(imaginary_params):
    back = read_exponents(build_operator(imaginary_params))
    np.testing.assert_allclose(back.a, imaginary_params.a, atol=1e-12)
    assert abs(back.s - imaginary_params.s) < 1e-12


def test_prescribed_exponent_at_zero():
    t, s = 0.35, -1 + 0.3j
    p = DarbouxParams((2j * t, -2j * t, 0, 2 * (s + 1)), s, 0.4 + 0.2j)
    op = build_operator(p)
    assert abs(op.exponent_difference(0) - 2j * t) < 1e-14
    assert abs(op.exponent_difference(op.point("x")) + 2j * t) < 1e-14


def test_singular_set(imaginary_op, imaginary_params):
    roots = np.sort_complex(np.roots(imaginary_op.P[::-1]))
    np.testing.assert_allclose(roots, np.sort_complex([0, imaginary_params.x, 1]), atol=1e-14)


def test_fuchs_violation_rejected():
    with pytest.raises(ConstraintViolated):
        build_operator(DarbouxParams((0, 0, 0, 0), 0, 0.5))


@pytest.mark.parametrize("x", [0, 1])
def test_degenerate_position(x):
    with pytest.raises(DegeneratePosition):
        build_operator(DarbouxParams.from_exponents((0, 0, 0, 0), x))


def test_main_regime_flag(imaginary_params):
    assert imaginary_params.in_main_regime
    assert abs(imaginary_params.s.real + 1) < 1e-15
    assert not DarbouxParams.from_exponents((2, 0, 0, 0), 0.5).in_main_regime


def test_infinity_chart_has_exponents(imaginary_op, imaginary_params):
    w = imaginary_op.chart_at_infinity()
    assert abs(w.exponent_difference(0) - imaginary_params.a[3]) < 1e-12


# -- Gaudin reduction -------------------------------------------------------------

def test_untwisted_gaudin_gives_zero_exponents():
    p, _ = gaudin_to_darboux(GaudinData((-1, -1, -1, -1), 0.3, 0.5))
    np.testing.assert_allclose(p.a, 0, atol=1e-15)
    op = build_operator(p)
    for q in op.points:
        assert abs(op.exponent_difference(q)) < 1e-14


def test_zero_weights_give_half_sum():
    g = GaudinData((0, 0, 0, 0), 0.1, 0.5)
    # half sums in the order of the marked points (x, 1, 0, inf)
    np.testing.assert_allclose(GAUDIN_MATRIX @ g.a_star(), [2, 0, 0, 0], atol=1e-15)
    p = gaudin_exponents(g)
    np.testing.assert_allclose(p.a, [0, 2, 0, 0], atol=1e-15)


def test_okamoto_matrix_is_an_involution():
    np.testing.assert_allclose(OKAMOTO_MATRIX @ OKAMOTO_MATRIX, np.eye(4), atol=1e-15)


def test_half_sum_map_is_orthogonal_and_invertible():
    # the Gaudin half-sum pattern is orthogonal, so its transpose recovers a_*
    np.testing.assert_allclose(GAUDIN_MATRIX.T @ GAUDIN_MATRIX, np.eye(4), atol=1e-15)
    a_star = np.array([0.3j, -0.2j, 0.45j, 0.15j])
    np.testing.assert_allclose(GAUDIN_MATRIX.T @ (GAUDIN_MATRIX @ a_star), a_star, atol=1e-15)


def test_unsigned_half_sum_pattern_has_order_four():
    # sign pattern (++++), (--++), (+-+-), (-++-): its square is a signed
    # permutation, so "applying it twice" does not return a_*
    S = 0.5 * np.array([[1, 1, 1, 1], [-1, -1, 1, 1], [1, -1, 1, -1], [-1, 1, 1, -1]])
    sq = S @ S
    assert not np.allclose(sq, np.eye(4))
    np.testing.assert_allclose(np.linalg.matrix_power(S, 4), np.eye(4), atol=1e-15)
    # the implemented map differs from it by the sign of the exponent at 1
    np.testing.assert_allclose(np.diag([1, -1, 1, 1]) @ S, GAUDIN_MATRIX, atol=1e-15)


def test_gaudin_exponents_match_indicial_readback():
    g = GaudinData((-1 + 0.3j, -1 - 0.2j, -1 + 0.45j, -1 + 0.15j), 0.2, 0.3 + 0.2j)
    p = gaudin_exponents(g)
    l1, l2, l3, _ = g.lam
    b = g.beta
    # local pictures of the reduced operator; near 1 the symbol is
    # (1 - x)(z - 1), which puts the exponent difference at beta - lambda_3
    expected = {"x": l1 + l2 + l3 - b + 2, "1": b - l3, "0": b - l2}
    op = build_operator(p)
    for lb, v in expected.items():
        assert abs(op.exponent_difference(op.point(lb)) - v) < 1e-13
    assert abs(p.a[3] - (b - l1)) < 1e-13


def test_gaudin_constraints():
    lam = (-1 + 0.3j, -1 - 0.2j, -1 + 0.45j, -1 + 0.15j)
    g = GaudinData(lam, 0.7 - 0.1j, 0.5)
    mu = g.eigenvalues()
    assert abs(sum(mu)) < 1e-14
    k = g.kappa
    lhs = k[3]
    rhs = k[0] + k[1] + k[2] + sum(z * m for z, m in zip(g.positions, mu))
    assert abs(lhs - rhs) < 1e-14
    with pytest.raises(ConstraintViolated):
        GaudinData(lam, mu[0], 0.5, mu=(mu[0], mu[1] + 0.1, mu[2])).eigenvalues()


def test_accessory_slope_in_mu1():
    g = GaudinData((-1 + 0.3j, -1 - 0.2j, -1 + 0.45j, -1 + 0.15j), 0.0, 0.3 + 0.2j)
    x = g.x
    vals = [gaudin_accessory(g.with_mu1(m)) for m in (0, 1, 2.5 + 1j)]
    assert abs((vals[1] - vals[0]) - x * (x - 1)) < 1e-14
    assert abs((vals[2] - vals[0]) - (2.5 + 1j) * x * (x - 1)) < 1e-13
    assert abs(mu1_from_accessory(g, vals[2]) - (2.5 + 1j)) < 1e-13


@pytest.mark.parametrize("x", [0.5, 0.3 + 0.2j])
@pytest.mark.parametrize("mu1", [0.7 + 0.3j, -2 + 1j])
def test_untwisted_oper_is_projectively_equivalent(x, mu1):
    # no reality involved: at every mu1 the two equations have the same
    # projective monodromy, so the squared pair traces coincide
    g = GaudinData((-1, -1, -1, -1), mu1, x)
    p, lam = gaudin_to_darboux(g)
    rd = compute_monodromy(build_operator(p), lam, CFG)
    ro = compute_monodromy(gaudin_oper(g), 0, CFG)
    for a, b in itertools.combinations(("0", "x", "1"), 2):
        t1 = np.trace(rd[a] @ rd[b]) ** 2
        t2 = np.trace(ro[a] @ ro[b]) ** 2
        assert abs(t1 - t2) < 1e-10 * max(1, abs(t2))


# -- adjoint and duality ------------------------------------------------------------

def test_adjoint_examples():
    z = DarbouxParams.from_exponents((0, 0, 0, 0), 0.5)
    assert algebraic_adjoint(z).a == z.a
    t, c = 0.2, 0.3j
    p = DarbouxParams((2j * t, 0, 0, c), (2j * t + c) / 2 - 1, 0.4)
    q = algebraic_adjoint(p)
    np.testing.assert_allclose(q.a, (-2j * t, 0, 0, -c), atol=1e-15)
    q.check_fuchs()
    r = algebraic_adjoint(q)
    assert r.a == p.a and r.s == p.s


def test_adjoint_is_formal_adjoint(imaginary_params):
    adj = build_operator(imaginary_params).formal_adjoint()
    other = build_operator(algebraic_adjoint(imaginary_params))
    np.testing.assert_allclose(adj.P, other.P, atol=1e-14)
    np.testing.assert_allclose(adj.Q, other.Q, atol=1e-14)
    np.testing.assert_allclose(adj.R[1:], other.R[1:], atol=1e-14)
    c = adjoint_accessory_shift(imaginary_params)
    np.testing.assert_allclose(adj.R[0] - (other.R[0] if len(other.R) else 0), c, atol=1e-14)


def test_lame_slice_is_self_adjoint():
    s = -1 + 0.4j
    p = lame_params(s, 0.3 + 0.1j)
    assert p.fuchs_defect < 1e-15
    adj = build_operator(p).formal_adjoint()
    # after s <-> -2 - s the adjoint is the Lame operator of the adjoint twist
    other = build_operator(lame_params(-2 - s, p.x))
    np.testing.assert_allclose(adj.P, other.P, atol=1e-14)
    np.testing.assert_allclose(adj.Q, other.Q, atol=1e-14)
    np.testing.assert_allclose(adj.R[1:], other.R[1:], atol=1e-14)


def test_okamoto_examples():
    z = DarbouxParams.from_exponents((0, 0, 0, 0), 0.5)
    assert okamoto_dual(z).a == (0, 0, 0, 0)
    d = okamoto_dual(DarbouxParams.from_exponents((2, 0, 0, 0), 0.5))
    np.testing.assert_allclose(d.a, (1, -1, 1, -1), atol=1e-15)


def test_okamoto_involution_and_fuchs(imaginary_params):
    d = okamoto_dual(imaginary_params)
    assert d.fuchs_defect < 1e-14
    dd = okamoto_dual(d)
    np.testing.assert_allclose(dd.a, imaginary_params.a, atol=1e-14)
    assert abs(dd.s - imaginary_params.s) < 1e-14


# -- reducibility ---------------------------------------------------------------------

def test_imaginary_exponents_always_irreducible(imaginary_params):
    assert reducibility_locus(imaginary_params).kind is Reducibility.ALWAYS_IRREDUCIBLE


def test_reducibility_witness_for_positive_half_sum():
    r = reducibility_locus(DarbouxParams.from_exponents((2, 0, 0, 0), 0.5))
    assert r.kind is Reducibility.POSSIBLY_REDUCIBLE
    assert r.half_sum == 1 and r.witness[0] == 1
    assert all(eps[0] == 1 and h == 1 for eps, h in r.all_witnesses)
    assert len(r.all_witnesses) == 8


def test_reducibility_enumeration():
    r = reducibility_locus(DarbouxParams.from_exponents((1, 1, -1, -1), 0.5))
    assert r.kind is Reducibility.POSSIBLY_REDUCIBLE
    assert r.witness == (1, 1, -1, -1) and r.half_sum == 2
    # independent enumeration of the 16 sign vectors
    sums = {eps: sum(e * v for e, v in zip(eps, (1, 1, -1, -1))) / 2
            for eps in itertools.product((1, -1), repeat=4)}
    assert set(sums.values()) == {0, 1, -1, 2, -2}
    assert {eps for eps, h in r.all_witnesses} == {e for e, h in sums.items() if h > 0}


# -- parameter files --------------------------------------------------------------------

def test_params_from_json():
    p, lam, g = params_from_json({"a": [[0, 0.4], [0, 0.2], [0, -0.1], [0, 0.3]],
                                  "x": [0.3, 0.1]})
    assert g is None
    np.testing.assert_allclose(p.a, (0.4j, 0.2j, -0.1j, 0.3j))
    assert abs(p.s - (0.4j - 1)) < 1e-15


def test_params_from_json_rejects_garbage():
    with pytest.raises(ConfigError):
        params_from_json({"a": [[0, 0]]})
