import numpy as np
import pytest

from darbouxspec.eigenfn import (PATH_TOL, characterize, eigen_residual, conjugate_residual,
                                 assemble, expansion_basis, gluing_matrix, gram_matrix,
                                 graded_radial_rule, l2_norm, local_expansion_check,
                                 polar_patch_rule, sample_grid)
from darbouxspec.darboux import DarbouxParams, build_operator
from darbouxspec.errors import NotSingleValued
from darbouxspec.reality import detect, scan_spectrum

LAM_A = -1.1726340099
LAM_B = 0.2643357039


@pytest.fixture(scope="module")
def sections(slice_params, slice_op):
    out = []
    for lam in (LAM_A, LAM_B):
        res = detect(slice_params, lam)
        out.append(assemble(slice_op, lam, res.form))
    return out


# -- local expansions on synthetic data --------------------------------------------

@pytest.mark.parametrize("alpha", [0.3j, -0.45j, 0.25])
def test_synthetic_fit_is_exact(alpha):
    f = lambda w: (np.abs(w) ** (2 * alpha) - 1) / (2 * alpha) + 0.7
    fit = local_expansion_check(f, "synthetic", alpha)
    assert fit.passed
    assert np.all(fit.residuals < 1e-12)
    np.testing.assert_allclose(fit.coefficients[:, 0], 1, atol=1e-10)
    np.testing.assert_allclose(fit.coefficients[:, 1], 0.7, atol=1e-10)


def test_synthetic_fit_log_limit():
    fit = local_expansion_check(lambda w: 2 * np.log(np.abs(w)) - 1, "log", 0)
    assert fit.passed
    np.testing.assert_allclose(fit.coefficients[-1], [2, -1], atol=1e-10)


def test_basis_is_continuous_in_alpha():
    r = np.array([1e-3, 0.1, 0.5])
    np.testing.assert_allclose(expansion_basis(r, 1e-9), np.log(r), rtol=1e-6)


def test_fit_fails_with_antiholomorphic_pole():
    alpha = 0.3j
    f = lambda w: expansion_basis(np.abs(w), alpha) + 1e-3 / np.conj(w)
    assert not local_expansion_check(f, "pole", alpha).passed


def test_fit_passes_with_smooth_correction():
    alpha = 0.3j
    f = lambda w: expansion_basis(np.abs(w), alpha) + 2 + 0.5 * (w + np.conj(w))
    fit = local_expansion_check(f, "smooth", alpha)
    assert fit.passed and fit.slope >= 0.5


# -- quadrature ---------------------------------------------------------------------

@pytest.mark.parametrize("t", [0.0, 0.4, -1.3])
def test_polar_rule_integrates_oscillating_modulus(t):
    # int_{|w| < R} |w|^{2 i t} d^2 w = 2 pi R^{2 + 2 i t} / (2 + 2 i t)
    R = 0.3
    r, th, wt = polar_patch_rule(R, n_r=12, n_theta=8)
    got = np.sum(wt * r ** (2j * t))
    assert abs(got - 2 * np.pi * R ** (2 + 2j * t) / (2 + 2j * t)) < 1e-10


def test_graded_rule_handles_log_singularity():
    # int_0^1 log(r) r dr = -1/4
    r, w = graded_radial_rule(1.0, 0.5, 10)
    assert abs(np.sum(w * r * np.log(r)) + 0.25) < 1e-10


# -- gluing --------------------------------------------------------------------------

def test_gluing_matrix_recovers_inverse_form():
    rng = np.random.default_rng(4)
    D = np.diag([1.0, -1.0])
    mats = []
    for _ in range(3):
        b = rng.normal() + 1j * rng.normal()
        a = np.sqrt(1 + abs(b) ** 2) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        mats.append(np.array([[a, b], [np.conj(b), np.conj(a)]]))
    G, res = gluing_matrix(mats, mats)
    assert res < 1e-13
    # M D^{-1} M^dagger = D^{-1} for M in SU(1, 1)
    ph = G[0, 0] / abs(G[0, 0])
    np.testing.assert_allclose(G / ph, D / np.sqrt(2), atol=1e-12)


# -- assembled sections ---------------------------------------------------------------

def test_sections_are_single_valued(sections):
    for sec in sections:
        assert max(sec.overlap_defect.values()) < PATH_TOL
        assert max(sec.loop_defect.values()) < PATH_TOL
        assert sec.gluing_residual < 1e-10


def test_eigen_and_conjugate_residuals(slice_op, sections):
    for sec in sections:
        assert eigen_residual(slice_op, sec, sec.lam) < 1e-6
        assert conjugate_residual(slice_op, sec, sec.lam) < 1e-6


def test_residual_detects_wrong_eigenvalue(slice_op, sections):
    sec = sections[0]
    assert eigen_residual(slice_op, sec, sec.lam + 0.1) > 1e-3


def test_form_matches_coefficients(sections):
    # on the self-adjoint slice G is the inverse invariant form
    for sec in sections:
        assert sec.metadata["form_defect"] < 1e-8


def test_sections_are_real_on_slice(sections):
    for sec in sections:
        assert sec.is_real() < 1e-12


def test_normalization_and_orthogonality(sections):
    g = gram_matrix(sections)
    np.testing.assert_allclose(np.diag(g).real, 1, atol=1e-6)
    assert abs(g[0, 1]) < 1e-4
    assert abs(l2_norm(sections[0]) - 1) < 1e-6


def test_local_fits_at_every_puncture(sections):
    for sec in sections:
        rep = characterize(sec)
        assert rep["local_fits_passed"], rep["local_fits"]
        assert set(rep["local_fits"]) == {"0", "x", "1", "inf"}


def test_infinity_chart_matches_finite_chart(sections):
    sec = sections[1]
    w = 0.05 * np.exp(1j * np.array([0.3, 1.7, 4.0]))
    z = 1 / w
    # s = -1 on the slice, so the chart factor is |w|^{2 s}
    s = sec.op.s
    assert s == -1
    expected = sec(z) * np.abs(w) ** (2 * s)
    np.testing.assert_allclose(sec.local_values("inf", w), expected, rtol=1e-12)


def test_non_spectral_point_rejected(slice_op):
    with pytest.raises(NotSingleValued):
        assemble(slice_op, 0.9 + 0.2j)


def test_sample_grid_shape(sections):
    re, im, v = sample_grid(sections[0], (-1, 2, -1, 1), (6, 4))
    assert v.shape == (4, 6)
    assert np.all(v >= 0)


def test_imaginary_exponent_section():
    p = DarbouxParams.from_exponents((0.4j, 0.2j, -0.1j, 0.3j), 0.5)
    pts = scan_spectrum(p, (0.0, 0.4, -0.6, -0.2), (16, 16))
    assert len(pts) == 1
    op = build_operator(p)
    sec = assemble(op, pts[0].lam, pts[0].form)
    rep = characterize(sec)
    assert rep["eigen_residual"] < 1e-6 and rep["conjugate_residual"] < 1e-6
    for lb, fit in rep["local_fits"].items():
        assert fit["passed"], lb
        assert fit["alpha"][1] != 0
