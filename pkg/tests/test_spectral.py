import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import sph_harm_y

from pfl.hydrogen import bound_state, radial_derivative, radial_wavefunction
from pfl.spectral import (
    RadialGrid,
    SingularShiftError,
    apply_operator_function,
    build_radial_hamiltonian,
    derivative_operator,
    dz_coefficient,
    eigendecompose,
    resolve,
    richardson,
)
from pfl.units import ParameterError, Params

P = Params(m=1.0, beta=0.3)


def test_grid_basics():
    g = RadialGrid(100, 1e-3, 50.0)
    r = g.nodes
    assert r[0] == pytest.approx(1e-3) and r[-1] == pytest.approx(50.0)
    assert np.all(np.diff(r) > 0)
    f = np.exp(-r)
    assert np.allclose(g.from_vector(g.to_vector(f)), f)
    d = g.doubled()
    assert (d.n_points, d.r_max, d.r_min) == (200, 100.0, 1e-3)
    u = RadialGrid(100, r_max=10.0, scheme="uniform")
    assert u.nodes[0] > 0 and u.nodes[-1] < 10.0
    with pytest.raises(ValueError):
        RadialGrid(1)
    with pytest.raises(ValueError):
        RadialGrid(10, 5.0, 1.0)
    with pytest.raises(ValueError):
        RadialGrid(10, scheme="cheb")


def test_vector_inner_product_is_radial_integral():
    g = RadialGrid(3000, 1e-5, 60.0)
    f = np.exp(-g.nodes)
    z = g.to_vector(f)
    assert z @ z == pytest.approx(2 / 8, rel=1e-8)  # int r^2 e^{-2r} dr


def test_symmetry(default_grid):
    op = build_radial_hamiltonian(1, P, default_grid)
    rng = np.random.default_rng(1)
    u, w = rng.normal(size=(2, default_grid.n_points))
    assert np.array_equal(op.reduced, op.reduced.T)
    assert u @ op.apply(w) == pytest.approx(op.apply(u) @ w, rel=1e-13)


def test_rejects_non_hydrogenic(default_grid):
    with pytest.raises(ParameterError):
        build_radial_hamiltonian(0, Params(beta=1.0, Z=1.0), default_grid)
    with pytest.raises(ValueError):
        build_radial_hamiltonian(-1, P, default_grid)


@pytest.mark.parametrize("l", [0, 1])
def test_bound_spectrum(default_grid, l):
    d = eigendecompose(build_radial_hamiltonian(l, P, default_grid))
    exact = np.array([-P.m * P.betaZ**2 / (2 * n * n) for n in range(l + 1, 6)])
    got = d.eigenvalues[: exact.size]
    assert np.max(np.abs(got / exact - 1)) < 1e-6


def test_lowest_levels_higher_channels(default_grid):
    for l in (2, 3, 4):
        d = eigendecompose(build_radial_hamiltonian(l, P, default_grid))
        exact = -P.m * P.betaZ**2 / (2 * (l + 1) ** 2)
        assert d.eigenvalues[0] >= exact * (1 + 1e-6)
        assert d.eigenvalues[0] == pytest.approx(exact, rel=1e-6)


def test_eigen_residual_and_completeness(default_grid):
    op = build_radial_hamiltonian(0, P, default_grid)
    d = eigendecompose(op)
    v = d.eigenvectors
    norm_h = np.linalg.norm(op.matrix, 2)
    for i in range(5):
        res = np.linalg.norm(op.apply(v[:, i]) - d.eigenvalues[i] * v[:, i])
        # residual relative to the operator norm (see notes on the absolute form)
        assert res <= 1e-12 * norm_h
    w = np.random.default_rng(0).normal(size=default_grid.n_points)
    c = d.coefficients(w)
    assert c @ c == pytest.approx(w @ w, rel=1e-10)
    assert apply_operator_function(d, lambda e: np.ones_like(e), w) == pytest.approx(w @ w, rel=1e-10)


def test_refinement_convergence(default_grid):
    a = eigendecompose(build_radial_hamiltonian(0, P, default_grid)).eigenvalues[:3]
    b = eigendecompose(build_radial_hamiltonian(0, P, default_grid.doubled())).eigenvalues[:3]
    assert np.max(np.abs(b / a - 1)) < 1e-7


def test_box_continuum_density():
    small = RadialGrid(800, 1e-4, 100.0)
    big = RadialGrid(1600, 1e-4, 200.0)
    p = Params(beta=1.0, Z=1.0, betaZ_limit=1.5)
    cnt = []
    for g in (small, big):
        e = eigendecompose(build_radial_hamiltonian(0, p, g)).eigenvalues
        cnt.append(np.count_nonzero((e > 0) & (e < 0.5)))
    # particle in a box: level count below a fixed energy grows linearly with R_max
    assert cnt[1] / cnt[0] == pytest.approx(2.0, rel=0.1)


def test_operator_function_sum_rules(default_grid):
    p = Params(beta=1.0, Z=1.0, betaZ_limit=1.5)
    s = bound_state(1, 0, p, default_grid)
    r = default_grid.nodes
    w = default_grid.to_vector(radial_derivative(1, 0, r))
    d1 = eigendecompose(build_radial_hamiltonian(1, p, default_grid))
    dc = apply_operator_function(d1, lambda e: e - s.energy, w)
    assert dc == pytest.approx(2.0, rel=1e-3)
    d0 = eigendecompose(build_radial_hamiltonian(0, p, default_grid))
    assert abs(apply_operator_function(d0, lambda e: e - s.energy, s.radial.vector)) < 1e-10


def test_operator_function_rejects_non_finite(default_grid):
    d = eigendecompose(build_radial_hamiltonian(0, P, default_grid))
    with pytest.raises(FloatingPointError, match="eigenvalue"):
        with np.errstate(divide="ignore"):
            apply_operator_function(d, lambda e: 1 / (e - d.eigenvalues[0]), np.ones(default_grid.n_points))


def test_resolve(default_grid):
    op = build_radial_hamiltonian(1, P, default_grid)
    rng = np.random.default_rng(3)
    y = rng.normal(size=default_grid.n_points)
    for shift in (0.05, 0.3, 1e3):
        x = resolve(op, shift, op.apply(y) + shift * y)
        assert np.linalg.norm(x - y) <= 1e-9 * np.linalg.norm(y)
    rhs = rng.normal(size=default_grid.n_points)
    big = 1e12
    assert np.linalg.norm(resolve(op, big, rhs)) == pytest.approx(np.linalg.norm(rhs) / big, rel=1e-3)
    d = eigendecompose(op)
    v = d.eigenvectors[:, 0]
    x = resolve(op, 0.2, v)
    assert np.allclose(x, v / (d.eigenvalues[0] + 0.2), atol=1e-12)
    with pytest.raises(SingularShiftError):
        resolve(op, -d.eigenvalues[0], v)


def test_richardson():
    # f(h) = 1 + h^4 exactly extrapolated
    h = 0.1
    val, err = richardson(1 + h**4, 1 + (h / 2) ** 4, 0.5)
    assert val == pytest.approx(1.0, abs=1e-15)
    assert err == pytest.approx(h**4 * (1 - 1 / 16))


def test_uniform_scheme():
    g = RadialGrid(3000, r_max=60.0, scheme="uniform")
    d = eigendecompose(build_radial_hamiltonian(1, Params(beta=1.0, Z=1.0, betaZ_limit=1.5), g))
    assert d.eigenvalues[0] == pytest.approx(-0.125, rel=1e-6)
    d0 = eigendecompose(build_radial_hamiltonian(0, Params(beta=1.0, Z=1.0, betaZ_limit=1.5), g))
    assert d0.eigenvalues[0] == pytest.approx(-0.5, rel=1e-3)


def test_dz_coefficient_matches_angular_integral():
    for L in range(4):
        for M in range(-L, L + 1):
            def integrand(th, L=L, M=M):
                y1 = sph_harm_y(L + 1, M, th, 0.0)
                y0 = sph_harm_y(L, M, th, 0.0)
                return 2 * math.pi * (np.conj(y1) * y0).real * math.cos(th) * math.sin(th)

            val = quad(integrand, 0, math.pi, epsabs=1e-13)[0]
            assert dz_coefficient(L, M) == pytest.approx(val, abs=1e-12)
    assert dz_coefficient(1, 2) == 0.0


@pytest.mark.parametrize("scheme", ["log", "uniform"])
def test_derivative_operator(scheme):
    g = RadialGrid(4000, 1e-4, 100.0) if scheme == "log" else RadialGrid(4000, r_max=100.0, scheme="uniform")
    r = g.nodes
    # the stencil is truncated at the inner boundary; compare away from the first two nodes
    k = 2
    # L = 1 -> 2 acting on R_21, and the transpose back on R_32
    up = derivative_operator(1, g) @ g.to_vector(radial_wavefunction(2, 1, r))
    exact = g.to_vector(radial_derivative(2, 1, r) - radial_wavefunction(2, 1, r) / r)
    assert np.linalg.norm((up - exact)[k:]) < 1e-7 * np.linalg.norm(exact)
    down = -(derivative_operator(1, g).T @ g.to_vector(radial_wavefunction(3, 2, r)))
    exact = g.to_vector(radial_derivative(3, 2, r) + 3 * radial_wavefunction(3, 2, r) / r)
    assert np.linalg.norm((down - exact)[k:]) < 1e-7 * np.linalg.norm(exact)
