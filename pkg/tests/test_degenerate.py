import numpy as np
import pytest

from darbouxspec.degenerate import (REDUCIBLE_MULTIPLICITY, TRIGONOMETRIC_MULTIPLICITY,
                                    CrossCheckFailed, mu_from_lambda, reducible_curve,
                                    reducible_row, reducible_spectrum_membership, trig_beta,
                                    trig_lambda, trig_monodromy_crosscheck, trigonometric_point)


# -- reducible case ----------------------------------------------------------------

@pytest.mark.parametrize("c, lam, expected", [
    (0, 1, (2, 0.0)),
    (0, 0.25, (1, 0.0)),
    (1, 0, (0, 0.0)),
    (0, 0.3, None),
    (0, 0.3 + 0.1j, None),
])
def test_membership_examples(c, lam, expected):
    got = reducible_spectrum_membership(c, lam)
    if expected is None:
        assert got is None
    else:
        assert got[0] == expected[0] and abs(got[1] - expected[1]) < 1e-12


@pytest.mark.parametrize("c", [0, 0.7 - 0.2j, 1j])
def test_curve_points_are_members(c):
    gam = np.linspace(-3, 3, 11)
    for n in (-2, 0, 1, 3):
        for g, lam in zip(gam, reducible_curve(c, n, gam)):
            m = reducible_spectrum_membership(c, lam)
            assert m is not None
            # either root may be reported; both lie on curves n and -n - 2 Re c
            l = m[0] / 2 + 1j * m[1]
            assert abs(l * l + c * l - lam) < 1e-10 * (1 + abs(lam))


def test_reducible_row():
    row = reducible_row(0, 1)
    assert row["member"] and row["n"] == 2
    assert row["multiplicity"] == REDUCIBLE_MULTIPLICITY == 2


# -- trigonometric case ---------------------------------------------------------------

def test_trig_symmetries():
    for mu in (0.3j, 0.25, 0.1 + 0.4j):
        assert abs(trig_lambda(mu) - trig_lambda(-mu)) < 1e-15
        assert abs(trig_beta(mu + 1) - trig_beta(mu)) < 1e-12
        assert abs(trig_lambda(mu_from_lambda(trig_lambda(mu))) - trig_lambda(mu)) < 1e-14


def test_trig_admissibility():
    assert trigonometric_point(0.3j)[1]            # beta = 2 + 2 cosh > 4
    assert trigonometric_point(0.5 + 0.2j)[1]      # beta = 2 - 2 cosh < 0
    assert not trigonometric_point(0.25)[1]        # beta = 2
    assert not trigonometric_point(0.1 + 0.4j)[1]  # beta not real


def test_trig_crosscheck_spectral():
    chk = trig_monodromy_crosscheck(0.3j, strict=True)
    assert chk.trace_error < 1e-8
    assert chk.form_exists and chk.spectral_point and chk.consistent
    assert chk.signature == (1, 1)
    assert chk.multiplicity == TRIGONOMETRIC_MULTIPLICITY == 1


def test_trig_crosscheck_real_beta_not_tempered():
    # beta = 2 is real, so a form exists, but it is not admissible
    chk = trig_monodromy_crosscheck(0.25)
    assert chk.form_exists and not chk.spectral_point and chk.consistent


def test_trig_crosscheck_complex_beta():
    chk = trig_monodromy_crosscheck(0.1 + 0.4j)
    assert not chk.form_exists and chk.consistent


def test_trig_boundary_flagged():
    chk = trig_monodromy_crosscheck(0.5)
    assert chk.boundary
    assert abs(chk.beta) < 1e-12
    assert chk.trace_error < 1e-8


@pytest.mark.parametrize("mu", [0.2 + 0.1j, 0.7 - 0.3j, 0.05 + 0.45j])
def test_trig_trace_formula(mu):
    chk = trig_monodromy_crosscheck(mu)
    assert chk.trace_error < 1e-8


def test_strict_mode_raises():
    with pytest.raises(CrossCheckFailed):
        trig_monodromy_crosscheck(0.3j, trace_tol=1e-30, strict=True)
