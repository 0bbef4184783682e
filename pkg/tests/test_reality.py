import numpy as np
import pytest

from darbouxspec.darboux import GaudinData
from darbouxspec.monodromy import compute_monodromy, from_matrices
from darbouxspec.reality import (DEFAULT_TOLERANCES, Detector, DetectorTolerances,
                                 HermitianForm, SpectralPoint, Window, detect, invariant_form,
                                 okamoto_reality_check, scan_spectrum, weyl_count, weyl_ratios)

J = np.array([[0, 1], [1, 0]], dtype=complex)
REAL_POINT = -1.1726340099     # from slcheck P1 at x = 1/2
COMPLEX_POINT = 0.5 + 0.41138117020j


def su11_pair(rng):
    """Two random elements of SU(1, 1) (preserving diag(1, -1))."""
    out = []
    for _ in range(2):
        b = rng.normal() + 1j * rng.normal()
        a = np.sqrt(1 + abs(b) ** 2) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        out.append(np.array([[a, b], [np.conj(b), np.conj(a)]]))
    return out


# -- invariant_form on explicit matrices ----------------------------------------

@pytest.mark.parametrize("beta", [0.7, -2.0, 5.5])
def test_unipotent_pair(beta):
    Mm = np.array([[1, 1j], [0, 1]])
    Mp = np.array([[1, 0], [1j * beta, 1]])
    res = invariant_form([Mm, Mp])
    assert res.dmin < 1e-12
    assert res.form.congruent_to(J)
    assert res.signature == (1, 1)
    # the form is z1 conj(z2) + z2 conj(z1) up to scale
    h = res.form.h
    np.testing.assert_allclose(h / h[0, 1], J, atol=1e-12)
    for M in (Mm, Mp):
        assert np.linalg.norm(M.conj().T @ h @ M - h) < 1e-12


def test_unipotent_pair_with_complex_beta_has_no_form():
    res = invariant_form([np.array([[1, 1j], [0, 1]]), np.array([[1, 0], [1j * (0.7 + 0.5j), 1]])])
    assert res.dmin > 1e-3


def test_identity_representation_is_degenerate():
    I = np.eye(2)
    res = invariant_form(from_matrices({"0": I, "x": I, "1": I}, ("0", "x", "1")))
    assert res.dmin < 1e-14
    assert res.kernel_dim == 4
    assert not res.accepted()


def test_conjugated_su11_pair():
    rng = np.random.default_rng(11)
    A, B = su11_pair(rng)
    D = np.diag([1.0, -1.0])
    for M in (A, B):
        assert np.linalg.norm(M.conj().T @ D @ M - D) < 1e-12
    g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    gi = np.linalg.inv(g)
    res = invariant_form([g @ A @ gi, g @ B @ gi])
    assert res.dmin < 1e-12
    assert res.form.congruent_to(D)
    expected = HermitianForm(gi.conj().T @ D @ gi).h
    # forms are normalized up to sign, so compare up to a real scalar
    assert min(np.linalg.norm(res.form.h - expected), np.linalg.norm(res.form.h + expected)) < 1e-10


def test_conjugation_preserves_acceptance(slice_op):
    rep = compute_monodromy(slice_op, REAL_POINT)
    g = np.array([[2.0, 1 - 1j], [0.5j, 1.5]])
    gi = np.linalg.inv(g)
    conj = [g @ rep[lb] @ gi for lb in rep.order]
    a, b = invariant_form(rep), invariant_form(conj)
    assert a.kernel_dim == b.kernel_dim == 1
    assert a.signature == b.signature == (1, 1)
    assert b.dmin < 1e-7


def test_hermitian_form_normalization():
    f = HermitianForm(np.array([[-3, 0], [0, 1]]))
    assert abs(np.linalg.norm(f.h) - 1) < 1e-15
    assert f.signature == (1, 1)
    assert f.h[0, 0] > 0


# -- detector on operators ------------------------------------------------------------

def test_detect_accepts_real_spectral_point(slice_params):
    res = detect(slice_params, REAL_POINT)
    assert res.dmin < DEFAULT_TOLERANCES.accept_tol
    assert res.accepted()
    assert res.kernel_dim == 1


def test_detect_rejects_generic_point(slice_params):
    for lam in (0.9 + 0.2j, -3.3 + 1.7j, 1.0):
        assert detect(slice_params, lam).dmin > 1e-4


def test_kernel_never_degenerate_on_irreducible_slice(imaginary_op):
    det = Detector(imaginary_op)
    for lam in np.linspace(-3, 3, 7) + 0.4j:
        assert det(lam).kernel_dim <= 1


def test_detector_memoizes(slice_op):
    det = Detector(slice_op)
    det(0.3)
    det(0.3)
    assert det.evaluations == 1


# -- scans ------------------------------------------------------------------------------

def test_empty_window(slice_params):
    assert scan_spectrum(slice_params, (1.5, 1.9, 0.2, 0.6), (16, 16)) == []


def test_small_window_scan(slice_params):
    pts = scan_spectrum(slice_params, (0.3, 0.9, 0.2, 0.6), (16, 16))
    assert len(pts) == 1
    p = pts[0]
    assert abs(p.lam - COMPLEX_POINT) < 1e-8
    assert p.kernel_dim == 1 and p.signature == (1, 1)
    assert p.relation_residual < 1e-7
    d = p.to_json()
    assert d["tolerances"]["accept_tol"] == DEFAULT_TOLERANCES.accept_tol


def test_scan_output_sorted(slice_params):
    pts = scan_spectrum(slice_params, (-1.5, 1.5, -0.2, 0.2), (24, 16))
    lams = [p.lam for p in pts]
    assert len(lams) >= 4
    keys = [(abs(z), np.angle(z)) for z in lams]
    assert keys == sorted(keys)


def test_grid_minimum_size(slice_params):
    with pytest.raises(ValueError):
        scan_spectrum(slice_params, (0, 1, 0, 1), (8, 8))


def test_window_validation():
    with pytest.raises(ValueError):
        Window(1, 0, 0, 1)
    assert Window.coerce((0, 1, 0, 1)).contains(0.5 + 0.5j)


# -- Weyl counts --------------------------------------------------------------------------

def test_weyl_empty():
    np.testing.assert_array_equal(weyl_count([], [1, 2, 4]), [0, 0, 0])


def test_weyl_monotone():
    rng = np.random.default_rng(0)
    lams = rng.normal(size=50) * 4 + 1j * rng.normal(size=50) * 4
    c = weyl_count(list(lams), [1, 2, 4, 8, 16])
    assert np.all(np.diff(c) >= 0)
    assert c[-1] == np.sum(np.abs(lams) <= 16)


def test_weyl_accepts_points():
    p = SpectralPoint(3 + 4j, 0.0, HermitianForm(J), 1, (1, 1))
    np.testing.assert_array_equal(weyl_count([p], [4.9, 5.0]), [0, 1])
    r = weyl_ratios([10, 20, 0, 5])
    assert r[0] == 2 and r[1] == 0 and np.isnan(r[2])


def test_tolerances_json():
    t = DetectorTolerances(accept_tol=1e-8)
    assert t.to_json()["accept_tol"] == 1e-8
    assert t.kernel_tol == 1e-8


# -- Okamoto cross-check ----------------------------------------------------------------

def test_okamoto_untwisted_slice():
    g = GaudinData((-1, -1, -1, -1), 0, 0.5)
    rep = okamoto_reality_check(g, (-1.5, 1.5, -0.6, 0.6), (16, 16), n_off=4)
    assert rep.n_spectral >= 3
    assert rep.agreement_rate == 1.0
    for s in rep.samples:
        assert s.darboux_flag == s.spectral
        assert s.oper_flag == s.spectral


def test_okamoto_off_spectrum_controls_are_negative():
    g = GaudinData((-1 + 0.3j, -1 - 0.2j, -1 + 0.45j, -1 + 0.15j), 0, 0.5)
    rep = okamoto_reality_check(g, (-2, 2, -2, 2), (16, 16), n_off=5, points=[])
    assert len(rep.samples) == 5
    assert not any(s.darboux_flag or s.oper_flag for s in rep.samples)
