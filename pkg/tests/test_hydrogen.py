import math

import numpy as np
import pytest
from scipy.special import sph_harm_y

from pfl.hydrogen import (
    GridError,
    bound_state,
    clebsch_gordan_1,
    gradient_channels,
    gradient_coefficient,
    radial_derivative,
    radial_wavefunction,
    sum_rules,
)
from pfl.spectral import RadialGrid, _reduced_decomp
from pfl.units import Params



def test_ground_state_formula():
    r = np.linspace(0.01, 10, 50)
    assert np.allclose(radial_wavefunction(1, 0, r), 2 * np.exp(-r), rtol=1e-14)
    # |phi(0)|^2 = R(0)^2 / (4 pi) = 1/pi in reduced units
    assert radial_wavefunction(1, 0, np.array([0.0]))[0] ** 2 / (4 * math.pi) == pytest.approx(1 / math.pi)


def test_derivative_matches_finite_difference():
    r = np.linspace(0.2, 15, 40)
    h = 1e-5
    for n, l in [(1, 0), (2, 0), (2, 1), (3, 1), (4, 2)]:
        fd = (radial_wavefunction(n, l, r + h) - radial_wavefunction(n, l, r - h)) / (2 * h)
        assert np.allclose(radial_derivative(n, l, r), fd, atol=1e-9)


def test_quantum_number_checks():
    with pytest.raises(ValueError):
        radial_wavefunction(2, 2, np.ones(3))
    with pytest.raises(ValueError):
        bound_state(0, 0, Params(), RadialGrid())


def test_energies():
    p = Params(m=1.3, beta=0.2)
    g = RadialGrid(400, 1e-4, 60)
    s = bound_state(2, 1, p, g)
    assert s.energy == pytest.approx(-1.3 * 0.04 / 8, rel=1e-15)
    assert s.reduced_energy == -0.125


def test_normalization_and_orthogonality(default_grid):
    p = Params()
    s1 = bound_state(1, 0, p, default_grid)
    s2 = bound_state(2, 0, p, default_grid)
    s3 = bound_state(3, 0, p, default_grid)
    assert s1.radial.norm2() == pytest.approx(1, abs=1e-14)
    assert abs(s1.radial.vector @ s2.radial.vector) < 1e-8
    assert abs(s2.radial.vector @ s3.radial.vector) < 1e-8


def test_grid_too_small():
    with pytest.raises(GridError):
        bound_state(3, 0, Params(), RadialGrid(100, 1e-4, 5.0))


def test_clebsch_gordan_orthonormality():
    # sum over m, q of |<l m 1 q|L M>|^2 = 2L + 1 for fixed L
    for l in range(0, 4):
        for L in (l - 1, l + 1):
            if L < 0:
                continue
            tot = sum(
                clebsch_gordan_1(l, m, q, L) ** 2 for m in range(-l, l + 1) for q in (-1, 0, 1)
            )
            assert tot == pytest.approx(2 * L + 1, rel=1e-14)


def _phi(n, l, m, x):
    r = np.linalg.norm(x)
    th, ph = math.acos(x[2] / r), math.atan2(x[1], x[0])
    return radial_wavefunction(n, l, np.array([r]))[0] * sph_harm_y(l, m, th, ph)


@pytest.mark.parametrize("n,l", [(2, 0), (2, 1), (3, 2), (4, 3)])
def test_gradient_coefficients_against_cartesian(n, l):
    x = np.array([0.7, -0.4, 1.1])
    r = np.linalg.norm(x)
    th, ph = math.acos(x[2] / r), math.atan2(x[1], x[0])
    R = radial_wavefunction(n, l, np.array([r]))[0]
    dR = radial_derivative(n, l, np.array([r]))[0]
    h = 1e-5
    for m in range(-l, l + 1):
        g = []
        for i in range(3):
            e = np.zeros(3)
            e[i] = h
            g.append((_phi(n, l, m, x + e) - _phi(n, l, m, x - e)) / (2 * h))
        sph = {1: -(g[0] + 1j * g[1]) / math.sqrt(2), 0: g[2], -1: (g[0] - 1j * g[1]) / math.sqrt(2)}
        for q in (-1, 0, 1):
            pred = 0.0
            for L, f in ((l + 1, dR - l * R / r), (l - 1, dR + (l + 1) * R / r)):
                if L >= 0 and abs(m + q) <= L:
                    pred += gradient_coefficient(l, m, q, L) * f * sph_harm_y(L, m + q, th, ph)
            assert abs(pred - sph[q]) < 1e-8


def test_channel_weights_are_angular_averages():
    for l in range(0, 4):
        for L, w in ((l + 1, (l + 1) / (2 * l + 1)), (l - 1, l / (2 * l + 1))):
            if L < 0:
                continue
            avg = sum(
                gradient_coefficient(l, m, q, L) ** 2 for m in range(-l, l + 1) for q in (-1, 0, 1)
            ) / (2 * l + 1)
            assert avg == pytest.approx(w, rel=1e-14)


def test_gradient_channels(default_grid):
    p = Params(beta=0.3)
    s = bound_state(1, 0, p, default_grid)
    ch = gradient_channels(s, p)
    assert len(ch) == 1 and ch.ls == (1,)
    assert ch.total_norm2() == pytest.approx(1.0, rel=1e-6)
    s = bound_state(2, 1, p, default_grid)
    ch = gradient_channels(s, p)
    assert ch.ls == (0, 2)
    assert ch.total_norm2() == pytest.approx(0.25, rel=1e-6)
    with pytest.raises(KeyError):
        ch.by_L(1)


@pytest.mark.parametrize("n,l", [(1, 0), (2, 0), (2, 1), (3, 1), (3, 2)])
def test_virial(default_grid, n, l):
    p = Params(m=1.7, beta=0.4)
    s = bound_state(n, l, p, default_grid)
    assert sum_rules(s, p).p2_expectation == pytest.approx(2 * p.m * abs(s.energy), rel=1e-6)


def test_sum_rules_unit_coupling(default_grid):
    p = Params(beta=1.0, Z=1.0, betaZ_limit=1.5)
    s = bound_state(1, 0, p, default_grid)
    d = {1: _reduced_decomp(1, default_grid)}
    rules = sum_rules(s, p, d)
    assert rules.p2_expectation == pytest.approx(1.0, rel=1e-10)
    assert rules.double_commutator == pytest.approx(2.0, rel=1e-3)
    quad = sum_rules(s, p)
    assert quad.double_commutator == pytest.approx(rules.double_commutator, rel=1e-9)


def test_double_commutator_excited(default_grid):
    p = Params(beta=1.0, Z=1.0, betaZ_limit=1.5)
    s2 = bound_state(2, 0, p, default_grid)
    assert sum_rules(s2, p).double_commutator == pytest.approx(0.25, rel=1e-3)
    p2 = bound_state(2, 1, p, default_grid)
    assert abs(sum_rules(p2, p).double_commutator) < 1e-6


def test_double_commutator_scaling(default_grid):
    p = Params(m=2.0, beta=0.1)
    s = bound_state(1, 0, p, default_grid)
    assert sum_rules(s, p).double_commutator == pytest.approx(2 * 8.0 * 0.1**4, rel=1e-3)
