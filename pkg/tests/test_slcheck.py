import numpy as np
import pytest

from darbouxspec.errors import ConfigError
from darbouxspec.reality import detect, scan_spectrum
from darbouxspec.darboux import DarbouxParams
from darbouxspec.slcheck import (ACCEPT_MISMATCH, PROBLEMS, mismatch_complex, real_spectrum,
                                 shoot)

X = 0.5
WINDOW = (-2.5, 2.5)


@pytest.fixture(scope="module")
def spectra():
    return {p: real_spectrum(p, X, WINDOW) for p in PROBLEMS}


def test_mismatch_is_real():
    for p in PROBLEMS:
        for lam in (-1.3, 0.4, 2.2):
            z = mismatch_complex(p, X, lam)
            assert abs(z.imag) < 1e-8 * max(1, abs(z.real))


def test_mismatch_changes_sign():
    assert shoot("P1", X, -1.3) * shoot("P1", X, -1.0) < 0


def test_roots_increasing_and_small(spectra):
    for p, roots in spectra.items():
        lams = [r.lam for r in roots]
        assert lams == sorted(lams)
        assert len(lams) >= 2, p
        for r in roots:
            assert abs(r.mismatch) < ACCEPT_MISMATCH


def test_first_problem_known_values(spectra):
    lams = [r.lam for r in spectra["P1"]]
    assert any(abs(l - (-1.1726340099)) < 1e-9 for l in lams)
    assert any(abs(l - 0.2643357039) < 1e-9 for l in lams)


def test_half_slice_reflection(spectra):
    # at x = 1/2 the map z -> 1 - z swaps the intervals [0, x] and [x, 1]
    # and sends Lambda to 1 - Lambda
    a = sorted(r.lam for r in spectra["P1"])
    b = sorted(1 - r.lam for r in spectra["P2"])
    inside = [l for l in a if WINDOW[0] + 1 < l < WINDOW[1] - 1]
    for l in inside:
        assert min(abs(l - m) for m in b) < 1e-8


def test_roots_are_spectral_points(spectra):
    params = DarbouxParams.from_exponents((0, 0, 0, 0), X)
    for roots in spectra.values():
        for r in roots:
            res = detect(params, r.lam)
            assert res.accepted(), (r.problem, r.lam, res.dmin)


def test_union_matches_scan_near_real_axis(spectra):
    # the scanner finds the real points on its own; the non-real points it
    # finds (0.5 +- 0.41i here) have no shooting counterpart
    params = DarbouxParams.from_exponents((0, 0, 0, 0), X)
    pts = scan_spectrum(params, (-1.5, 1.5, -0.6, 0.6), (24, 24))
    real_scan = sorted(p.lam.real for p in pts if abs(p.lam.imag) < 1e-8)
    union = sorted({round(r.lam, 8) for rs in spectra.values() for r in rs if -1.5 < r.lam < 1.5})
    assert len(real_scan) == len(union)
    assert any(abs(p.lam.imag) > 1e-3 for p in pts)
    np.testing.assert_allclose(real_scan, union, atol=1e-6)


def test_non_spectral_real_point_has_mismatch():
    for p in PROBLEMS:
        assert abs(shoot(p, X, 0.9)) > 1e-4


def test_config_errors():
    with pytest.raises(ConfigError):
        shoot("P4", X, 0.0)
    with pytest.raises(ConfigError):
        real_spectrum("P1", 1.5, WINDOW)
    with pytest.raises(ConfigError):
        real_spectrum("P1", X, (1, 0))
