"""Radial hydrogen Hamiltonian on a finite grid: spectra, operator functions, solves.

Everything is discretized in *reduced* units (``m = beta Z = 1``): lengths in
units of ``1/(m beta Z)`` and energies in units of ``m (beta Z)^2``.  Physical
results are obtained by scaling with :attr:`RadialOperator.energy_scale`, so a
decomposition computed once per (channel, grid) serves every ``m`` and
``beta Z``.

Grid functions are stored as weighted vectors ``z`` for which the plain
Euclidean dot product equals the radial integral ``int u(r)^2 dr`` of the
reduced function ``u = r R``.  On the log grid ``r = exp(x)`` this is
``z = sqrt(dx) r^{1/2} u``; on the uniform grid ``z = sqrt(h) u``.

The kinetic term uses the matrix Numerov approximation ``B^{-1} D2`` of the
second derivative (fourth order), written as ``H = G^{-1} [-K/(2 d^2) + Q] G^{-1}``
with ``K = B^{-1} D2`` symmetric.  The inner boundary of the log grid carries
a ghost point fixed by the regular small-``r`` behaviour of the channel.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .units import Params

__all__ = [
    "RadialGrid",
    "RadialOperator",
    "SpectralDecomp",
    "SingularShiftError",
    "build_radial_hamiltonian",
    "eigendecompose",
    "apply_operator_function",
    "resolve",
    "richardson",
    "derivative_operator",
    "dz_coefficient",
]


class SingularShiftError(ValueError):
    """The shifted operator is (numerically) singular."""


@dataclass(frozen=True)
class RadialGrid:
    """Discretization of ``(0, r_max)`` in units of ``1/(m beta Z)``.

    ``scheme="log"`` places ``n_points`` nodes uniformly in ``ln r`` between
    ``r_min`` and ``r_max``; ``scheme="uniform"`` places them at
    ``r_i = i h`` with ``h = r_max/(n_points + 1)`` (``r_min`` unused).
    """

    n_points: int = 2000
    r_min: float = 1e-4
    r_max: float = 200.0
    scheme: str = "log"

    def __post_init__(self) -> None:
        if self.scheme not in ("log", "uniform"):
            raise ValueError(f"unknown grid scheme {self.scheme!r}")
        if self.n_points < 2:
            raise ValueError("grid needs at least 2 points")
        if self.scheme == "log" and not 0 < self.r_min < self.r_max:
            raise ValueError("need 0 < r_min < r_max")
        if not self.r_max > 0:
            raise ValueError("r_max must be positive")

    @functools.cached_property
    def nodes(self) -> np.ndarray:
        if self.scheme == "log":
            r = np.exp(np.linspace(math.log(self.r_min), math.log(self.r_max), self.n_points))
        else:
            r = self.step * np.arange(1, self.n_points + 1)
        r.setflags(write=False)
        return r

    @property
    def step(self) -> float:
        """``dx`` in ``ln r`` (log scheme) or ``h`` in ``r`` (uniform scheme)."""
        if self.scheme == "log":
            return (math.log(self.r_max) - math.log(self.r_min)) / (self.n_points - 1)
        return self.r_max / (self.n_points + 1)

    @property
    def metric(self) -> np.ndarray:
        """Diagonal ``G`` of the similarity transform (``r`` or 1)."""
        return self.nodes if self.scheme == "log" else np.ones(self.n_points)

    def doubled(self) -> "RadialGrid":
        """Grid with twice the points and twice the box radius."""
        return RadialGrid(2 * self.n_points, self.r_min, 2 * self.r_max, self.scheme)

    def to_vector(self, radial: np.ndarray) -> np.ndarray:
        """Weighted vector ``z`` from samples of a radial function ``R(r)``."""
        r = self.nodes
        if self.scheme == "log":
            return math.sqrt(self.step) * r**1.5 * radial
        return math.sqrt(self.step) * r * radial

    def from_vector(self, z: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`to_vector`."""
        r = self.nodes
        if self.scheme == "log":
            return z / (math.sqrt(self.step) * r**1.5)
        return z / (math.sqrt(self.step) * r)


def _second_difference(n: int, corner: float = 0.0) -> sp.csr_matrix:
    main = np.full(n, -2.0)
    main[0] += corner
    off = np.ones(n - 1)
    return sp.diags([off, main, off], [-1, 0, 1], format="csr")


@dataclass(frozen=True, eq=False)
class RadialOperator:
    """Discrete ``h_l = -(1/2m) d^2/dr^2 + l(l+1)/(2 m r^2) - beta Z / r``.

    ``reduced`` is the dense symmetric matrix in reduced units; physical
    energies are ``energy_scale * reduced``.  The tridiagonal pieces
    (``d2``, ``b``, ``q``) allow shifted solves in ``O(N)``.
    """

    l: int
    grid: RadialGrid
    reduced: np.ndarray = field(repr=False)
    d2: sp.csr_matrix = field(repr=False)
    b: sp.csr_matrix = field(repr=False)
    q: np.ndarray = field(repr=False)
    energy_scale: float = 1.0

    @property
    def matrix(self) -> np.ndarray:
        """Dense matrix in physical energy units."""
        return self.energy_scale * self.reduced

    def apply(self, z: np.ndarray) -> np.ndarray:
        return self.energy_scale * (self.reduced @ z)

    def with_scale(self, energy_scale: float) -> "RadialOperator":
        return RadialOperator(self.l, self.grid, self.reduced, self.d2, self.b, self.q, energy_scale)

    def shifted_system(self, sigma) -> sp.csr_matrix:
        """Tridiagonal ``M(sigma)`` with ``(H_red + sigma) z = rhs`` equivalent to
        ``M y = B G rhs`` and ``z = G y`` (``sigma`` may be complex)."""
        g = self.grid.metric
        d = self.grid.step
        diag = self.q + sigma * g * g
        return (-0.5 / d**2) * self.d2 + self.b @ sp.diags(diag)


@functools.lru_cache(maxsize=12)
def _reduced_operator(l: int, grid: RadialGrid) -> RadialOperator:
    r = grid.nodes
    n = grid.n_points
    d = grid.step
    if grid.scheme == "log":
        # ghost value y_{-1} = rho y_0 from y ~ r^{l+1/2} (1 - r/(l+1))
        r_ghost = r[0] * math.exp(-d)
        rho = math.exp(-(l + 0.5) * d) * (1 - r_ghost / (l + 1)) / (1 - r[0] / (l + 1))
        q = (l + 0.5) ** 2 / 2.0 - r
    else:
        rho = 0.0
        q = l * (l + 1) / (2.0 * r * r) - 1.0 / r
    d2 = _second_difference(n, rho)
    b = sp.identity(n, format="csr") + d2 / 12.0
    k = sla.solve_banded((1, 1), _banded(b), d2.toarray())
    k = 0.5 * (k + k.T)
    g = grid.metric
    h = (-0.5 / d**2) * k
    h[np.diag_indices(n)] += q
    h /= g[:, None]
    h /= g[None, :]
    h = 0.5 * (h + h.T)
    h.setflags(write=False)
    q.setflags(write=False)
    return RadialOperator(l, grid, h, d2, b, q, 1.0)


def _banded(m: sp.spmatrix) -> np.ndarray:
    """Pack a tridiagonal sparse matrix into LAPACK banded storage."""
    m = sp.dia_matrix(m)
    n = m.shape[0]
    ab = np.zeros((3, n), dtype=m.dtype)
    ab[0, 1:] = m.diagonal(1)
    ab[1, :] = m.diagonal(0)
    ab[2, :-1] = m.diagonal(-1)
    return ab


def build_radial_hamiltonian(l: int, params: Params, grid: RadialGrid) -> RadialOperator:
    """Discrete radial Hamiltonian of channel ``l`` for the given parameters."""
    if l < 0:
        raise ValueError("l must be non-negative")
    params.require_hydrogenic()
    return _reduced_operator(int(l), grid).with_scale(params.m * params.betaZ**2)


@dataclass(frozen=True, eq=False)
class SpectralDecomp:
    """Eigenpairs of a :class:`RadialOperator` (ascending eigenvalues)."""

    l: int
    grid: RadialGrid
    reduced_eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)
    energy_scale: float = 1.0

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.energy_scale * self.reduced_eigenvalues

    def coefficients(self, w: np.ndarray) -> np.ndarray:
        """Expansion coefficients ``<v_i|w>``."""
        return self.eigenvectors.T @ w

    def bound_levels(self, rtol: float = 1e-6) -> np.ndarray:
        """Reduced eigenvalues with bound states snapped to ``-1/(2 n^2)``.

        Eigenvalues within ``rtol`` of an analytic hydrogen level are
        replaced by it so degenerate levels of different channels coincide
        exactly; everything else is returned unchanged.
        """
        e = np.array(self.reduced_eigenvalues, copy=True)
        neg = e < 0
        n = np.rint(np.sqrt(-0.5 / e[neg]))
        exact = -0.5 / n**2
        close = np.abs(e[neg] - exact) <= rtol * np.abs(exact)
        idx = np.flatnonzero(neg)[close]
        e[idx] = exact[close]
        return e

    def with_scale(self, energy_scale: float) -> "SpectralDecomp":
        return SpectralDecomp(self.l, self.grid, self.reduced_eigenvalues, self.eigenvectors, energy_scale)


@functools.lru_cache(maxsize=10)
def _reduced_decomp(l: int, grid: RadialGrid) -> SpectralDecomp:
    op = _reduced_operator(l, grid)
    try:
        w, v = sla.eigh(op.reduced, driver="evr")
    except (np.linalg.LinAlgError, sla.LinAlgError) as exc:  # pragma: no cover
        raise RuntimeError(f"eigensolver failed for channel l={l}") from exc
    w.setflags(write=False)
    v.setflags(write=False)
    return SpectralDecomp(l, grid, w, v, 1.0)


def eigendecompose(op: RadialOperator) -> SpectralDecomp:
    """Full eigendecomposition (cached per channel and grid)."""
    return _reduced_decomp(op.l, op.grid).with_scale(op.energy_scale)


def apply_operator_function(decomp: SpectralDecomp, g: Callable, w: np.ndarray) -> float:
    """Quadratic form ``<w| g(h) |w> = sum_i g(E_i) |<v_i|w>|^2``.

    ``g`` receives the array of physical eigenvalues.
    """
    e = decomp.eigenvalues
    vals = np.asarray(g(e), dtype=float)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        raise FloatingPointError(
            f"operator function not finite at eigenvalue E = {e[bad][0]!r}"
        )
    c = decomp.coefficients(w)
    return float(np.dot(vals, c * c))


def resolve(
    op: RadialOperator,
    shift: float,
    rhs: np.ndarray,
    *,
    threshold: float = 1e-8,
) -> np.ndarray:
    """Solve ``(h + shift) x = rhs``.

    Raises :class:`SingularShiftError` when ``min_i |E_i + shift|`` is below
    ``threshold`` times the energy scale of the bound spectrum,
    ``max(m (beta Z)^2, |shift|)``.
    """
    scale = op.energy_scale
    ev = _reduced_decomp(op.l, op.grid).reduced_eigenvalues * scale
    gap = float(np.min(np.abs(ev + shift)))
    if gap < threshold * max(scale, abs(shift)):
        raise SingularShiftError(
            f"h + shift nearly singular: min |E_i + shift| = {gap:.3g} (l={op.l})"
        )
    g = op.grid.metric
    sigma = shift / scale
    mat = op.shifted_system(sigma)
    rhs_t = op.b @ (g * np.asarray(rhs, dtype=float)) / scale
    y = sla.solve_banded((1, 1), _banded(mat), rhs_t)
    x = g * y
    # one step of iterative refinement against the dense operator
    resid = rhs - (op.apply(x) + shift * x)
    y = sla.solve_banded((1, 1), _banded(mat), op.b @ (g * resid) / scale)
    return x + g * y


def richardson(coarse: float, fine: float, ratio: float, order: int = 4) -> tuple[float, float]:
    """Extrapolate two levels with step ratio ``ratio = h_fine/h_coarse``.

    Returns ``(value, error)`` where ``error = |fine - coarse|``.
    """
    f = ratio**order
    return (fine - f * coarse) / (1.0 - f), abs(fine - coarse)


# -- angular-momentum coupling of d/dz -----------------------------------

def dz_coefficient(L: int, M: int) -> float:
    """``<L+1, M| cos(theta) |L, M>``."""
    if abs(M) > L:
        return 0.0
    return math.sqrt(((L + 1) ** 2 - M * M) / ((2 * L + 1) * (2 * L + 3)))


@functools.lru_cache(maxsize=32)
def _first_derivative(grid: RadialGrid) -> sp.csr_matrix:
    """Antisymmetric fourth-order first derivative in the grid variable."""
    n = grid.n_points
    d = grid.step
    c1, c2 = 8.0 / (12 * d), 1.0 / (12 * d)
    ones = np.ones(n)
    return sp.diags(
        [c2 * ones[:-2], -c1 * ones[:-1], c1 * ones[:-1], -c2 * ones[:-2]],
        [-2, -1, 1, 2],
        format="csr",
    )


@functools.lru_cache(maxsize=32)
def derivative_operator(L: int, grid: RadialGrid) -> sp.csr_matrix:
    """Radial part of ``d/dz`` from channel ``L`` up to ``L+1`` (reduced units).

    Acting on weighted vectors it represents ``f -> f' - L f / r``.  The
    block back from ``L+1`` to ``L`` is minus its transpose, which keeps the
    discrete ``d/dz`` exactly antisymmetric.
    """
    r = grid.nodes
    dx = _first_derivative(grid)
    if grid.scheme == "log":
        core = dx - (L + 1.5) * sp.identity(grid.n_points)
        return (sp.diags(1.0 / r) @ core).tocsr()
    return (dx - sp.diags((L + 1) / r)).tocsr()
