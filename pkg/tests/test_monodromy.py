import numpy as np
import pytest

from darbouxspec.darboux import DarbouxParams, build_operator
from darbouxspec.degenerate import trigonometric_operator
from darbouxspec.errors import ResidualTooLarge
from darbouxspec.monodromy import (ORDER_CONVENTION, LoopGeometry, MonodromyConfig,
                                   cauchy_riemann_defect, compute_monodromy, cubic_relation,
                                   default_base, from_matrices, monodromy_batch,
                                   trace_coordinates)

A = (0.4j, 0.2j, -0.1j, 0.3j)
LAM = 1.3 - 0.7j


@pytest.fixture(scope="module")
def op():
    return build_operator(DarbouxParams.from_exponents(A, 0.3 + 0.1j))


@pytest.fixture(scope="module")
def rep(op):
    return compute_monodromy(op, LAM)


def test_relation_residual(rep):
    assert rep.relation_residual < 1e-7
    assert rep.order == ("0", "x", "1")


def test_normalized_determinants(rep):
    for lb, M in rep.matrices.items():
        assert abs(np.linalg.det(M) - 1) < 1e-9, lb


def test_local_eigenvalues(op, rep):
    # the exponent pair at a finite point is (0, a_p)
    for lb, a in zip(("0", "x", "1"), A[:3]):
        ev = np.sort_complex(rep.local_eigenvalues(lb))
        np.testing.assert_allclose(ev, np.sort_complex([1, np.exp(2j * np.pi * a)]), atol=1e-7)
    # in the z chart psi = w^{-s} phi, so the loop at infinity picks up the
    # extra factor exp(-2 pi i s)
    ev = np.sort_complex(rep.local_eigenvalues("inf"))
    want = np.exp(-2j * np.pi * op.s) * np.array([1, np.exp(2j * np.pi * A[3])])
    np.testing.assert_allclose(ev, np.sort_complex(want), rtol=1e-7)


def test_trace_coordinates(rep):
    tc = trace_coordinates(rep)
    for t, a in zip((tc.t0, tc.tx, tc.t1, tc.tinf), A):
        assert abs(t - 2 * np.cos(np.pi * a)) < 1e-7
    assert tc.cubic_residual() < 1e-6


def test_imaginary_exponents_are_hyperbolic(rep):
    tc = trace_coordinates(rep)
    for t, a in zip((tc.t0, tc.tx, tc.t1, tc.tinf), A):
        tt = a.imag
        assert abs(t - 2 * np.cosh(np.pi * tt)) < 1e-7
        assert abs(t.imag) < 1e-7 and t.real >= 2


def test_parabolic_at_zero_exponent():
    rep = compute_monodromy(build_operator(DarbouxParams.from_exponents((0, 0, 0, 0), 0.5)), 0.7)
    tc = trace_coordinates(rep)
    for t in (tc.t0, tc.tx, tc.t1, tc.tinf):
        assert abs(t - 2) < 1e-8


def test_identity_representation():
    I = np.eye(2)
    r = from_matrices({"0": I, "x": I, "1": I}, ("0", "x", "1"))
    tc = trace_coordinates(r)
    np.testing.assert_allclose(tc.as_tuple(), 2, atol=1e-15)
    assert tc.cubic_residual() == 0


def test_cubic_relation_on_random_sl2_triples():
    # independent of the ODE: any A, B, C in SL2 with D = (ABC)^-1
    rng = np.random.default_rng(3)
    for _ in range(5):
        m = []
        for _ in range(3):
            X = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
            m.append(X / np.sqrt(np.linalg.det(X)))
        Am, Bm, Cm = m
        Dm = np.linalg.inv(Am @ Bm @ Cm)
        tr = np.trace
        assert cubic_relation(tr(Am), tr(Bm), tr(Cm), tr(Dm), tr(Am @ Bm), tr(Bm @ Cm),
                              tr(Am @ Cm)) < 1e-13


@pytest.mark.parametrize("cfg", [MonodromyConfig(vertex_offset=5),
                                 MonodromyConfig(base=0.6 + 0.9j),
                                 MonodromyConfig(n_vertices=24, radius_factor=0.4)])
def test_conjugation_invariance(op, rep, cfg):
    other = compute_monodromy(op, LAM, cfg)
    a = np.array(trace_coordinates(rep).as_tuple())
    b = np.array(trace_coordinates(other).as_tuple())
    assert np.max(np.abs(a - b)) < 1e-8 * max(1, np.max(np.abs(a)))


def test_batch_matches_single(op, rep):
    b = monodromy_batch(op, [LAM, 2.0])[0]
    for lb in rep.raw:
        np.testing.assert_allclose(b.raw[lb], rep.raw[lb], rtol=1e-14, atol=1e-14)


def test_holomorphic_in_lambda(op):
    assert cauchy_riemann_defect(op, LAM) < 1e-6


def test_residual_gate(op):
    with pytest.raises(ResidualTooLarge):
        compute_monodromy(op, LAM, MonodromyConfig(residual_max=1e-40))


def test_reducible_witness_shares_eigenvector():
    # a = (2, 0, 0, 0) gives s = 0, and L kills constants, so at lam = 0 the
    # constant solution (frame vector (1, 0)) is fixed by every loop
    p = DarbouxParams.from_exponents((2, 0, 0, 0), 0.5)
    assert p.s == 0
    rep = compute_monodromy(build_operator(p), 0)
    for lb, M in rep.raw.items():
        assert abs(M[1, 0]) < 1e-10 * np.abs(M).max(), lb
        assert abs(M[0, 0] - 1) < 1e-10, lb


def test_trigonometric_trace_at_infinity():
    mu = 0.3j
    beta = 2 + 2 * np.cos(2 * np.pi * mu)
    rep = compute_monodromy(trigonometric_operator(), mu * mu - 0.25)
    assert abs(np.trace(rep.Minf) - (2 - beta)) < 1e-8


def test_json_records_conventions(rep):
    d = rep.to_json()
    assert d["conventions"]["order"] == ORDER_CONVENTION
    assert d["matrices"]["0"][0][0] == [rep.M0[0, 0].real, rep.M0[0, 0].imag]


def test_base_moves_when_spoke_grazes_a_puncture():
    # x nearly above 0: the straight spoke from the default base to 0 passes
    # too close to x, so a shifted base is used
    op = build_operator(DarbouxParams.from_exponents(A, 0.227 + 0.291j))
    geo = LoopGeometry.build(op)
    assert geo.base != default_base(op.points)
    assert geo.base.imag > max(p.imag for p in op.points)
    rep = compute_monodromy(op, LAM)
    assert rep.relation_residual < 1e-7
    tc = trace_coordinates(rep)
    assert tc.cubic_residual() < 1e-6
