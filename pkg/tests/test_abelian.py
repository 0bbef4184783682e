import numpy as np
import pytest

from darbouxspec.abelian import (FourierHarmonic, GL1Oper, eigen_defect, enumerate_gl1_spectrum,
                                 gram_matrix, harmonic_oper, periodicity_defect,
                                 real_monodromy_gl1)
from darbouxspec.errors import ConfigError


def test_square_lattice_count_and_values():
    pts = enumerate_gl1_spectrum(1j, 5)
    assert len(pts) == 121
    for p in pts:
        assert abs(p.a - np.pi * (p.n + 1j * p.m)) < 1e-12
        assert abs(p.b + np.conj(p.a)) < 1e-12


def test_small_box():
    assert len(enumerate_gl1_spectrum(1j, 2)) == 25
    pts = enumerate_gl1_spectrum(0.3 + 1.1j, ((0, 1), (-1, 1)))
    assert [(p.m, p.n) for p in pts] == [(0, -1), (0, 0), (0, 1), (1, -1), (1, 0), (1, 1)]


def test_trivial_harmonic():
    h = FourierHarmonic(0, 0, 1j)
    assert h.a == 0
    np.testing.assert_allclose(h(np.array([0.3 + 0.2j, -1.7j])), 1)


def test_rectangular_lattice():
    # tau = 2i, (m, n) = (1, 0): a = 2 pi i (-m conj(tau)) / (tau - conj(tau)) = pi i
    assert abs(harmonic_oper(2j, 1, 0).a - np.pi * 1j) < 1e-14


@pytest.mark.parametrize("eps", [1e-3, 1e-6])
def test_perturbed_oper_rejected(eps):
    for m, n in [(0, 0), (1, 2), (-3, 1)]:
        a = harmonic_oper(1j, m, n).a
        assert real_monodromy_gl1(GL1Oper(a, 1j))
        assert not real_monodromy_gl1(GL1Oper(a + eps, 1j))
        assert not real_monodromy_gl1(GL1Oper(a + 1j * eps, 1j))


def test_perturbation_seen_only_by_second_period():
    # a real shift leaves the first period at zero; the second one moves
    op = GL1Oper(harmonic_oper(1j, 1, 1).a + 1e-4, 1j)
    p1, p2 = op.periods()
    assert abs(p1 - 2j * np.pi) < 1e-14
    assert abs(p2.imag / (2 * np.pi) - round(p2.imag / (2 * np.pi))) > 1e-5
    assert not real_monodromy_gl1(op)


def test_lattice_coordinates_roundtrip():
    tau = -0.4 + 0.8j
    for m, n in [(2, -1), (0, 3), (-2, -2)]:
        um, un = harmonic_oper(tau, m, n).lattice_coordinates()
        assert abs(um - m) < 1e-12 and abs(un - n) < 1e-12


@pytest.mark.parametrize("tau", [1j, 0.5 + 0.9j, -0.2 + 2j])
def test_harmonics_are_periodic_eigenfunctions(tau):
    for m, n in [(1, 0), (0, 1), (3, -2)]:
        h = FourierHarmonic(m, n, tau)
        assert periodicity_defect(h) < 1e-12
        assert eigen_defect(h) < 1e-12


def test_unit_modulus_and_lattice_values():
    h = FourierHarmonic(2, -1, 0.3 + 1.2j)
    u, v = np.array([0.1, 0.7]), np.array([0.25, 0.9])
    np.testing.assert_allclose(h(u + v * h.tau), h.on_lattice(u, v), atol=1e-12)
    np.testing.assert_allclose(np.abs(h(u + v * h.tau)), 1, atol=1e-15)


def test_gram_is_identity():
    hs = [p.harmonic for p in enumerate_gl1_spectrum(0.5 + 0.9j, 2)]
    np.testing.assert_allclose(gram_matrix(hs), np.eye(len(hs)), atol=1e-12)


def test_tau_validation():
    with pytest.raises(ConfigError):
        enumerate_gl1_spectrum(-1j, 2)
    with pytest.raises(ConfigError):
        enumerate_gl1_spectrum(1j, -1)
