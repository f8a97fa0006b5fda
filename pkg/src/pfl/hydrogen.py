"""Analytic hydrogenic bound states, their gradients and two exact sum rules.

Radial functions are sampled in reduced units (lengths ``1/(m beta Z)``), on
the same :class:`~pfl.spectral.RadialGrid` used by the spectral solver.
Physical factors of ``m beta Z`` are applied only where physical quantities
are returned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from .spectral import RadialGrid, apply_operator_function, build_radial_hamiltonian
from .units import Params

__all__ = [
    "RadialFunction",
    "HydrogenState",
    "GradientChannel",
    "GradientChannels",
    "SumRules",
    "GridError",
    "radial_wavefunction",
    "radial_derivative",
    "bound_state",
    "gradient_channels",
    "gradient_coefficient",
    "clebsch_gordan_1",
    "sum_rules",
]

NORM_TOL = 1e-6


class GridError(ValueError):
    """The radial grid cannot represent the requested state accurately."""


def _check_quantum_numbers(n: int, l: int) -> None:
    if not (n >= 1 and 0 <= l < n):
        raise ValueError(f"need n >= 1 and 0 <= l < n, got n={n}, l={l}")


def _norm_const(n: int, l: int) -> float:
    # (2/n)^{3/2} sqrt((n-l-1)! / (2n (n+l)!)) for unit length scale
    return math.exp(
        1.5 * math.log(2.0 / n) + 0.5 * (gammaln(n - l) - math.log(2 * n) - gammaln(n + l + 1))
    )


def radial_wavefunction(n: int, l: int, r: np.ndarray) -> np.ndarray:
    """Normalized ``R_nl(r)`` in reduced units (Bohr radius 1)."""
    _check_quantum_numbers(n, l)
    rho = 2.0 * np.asarray(r, dtype=float) / n
    return _norm_const(n, l) * np.exp(-rho / 2) * rho**l * eval_genlaguerre(n - l - 1, 2 * l + 1, rho)


def radial_derivative(n: int, l: int, r: np.ndarray) -> np.ndarray:
    """``dR_nl/dr`` in reduced units."""
    _check_quantum_numbers(n, l)
    r = np.asarray(r, dtype=float)
    rho = 2.0 * r / n
    lag = eval_genlaguerre(n - l - 1, 2 * l + 1, rho)
    dlag = -eval_genlaguerre(n - l - 2, 2 * l + 2, rho) if n - l - 1 >= 1 else 0.0
    # d/drho [e^{-rho/2} rho^l L] = e^{-rho/2} [(l/rho - 1/2) L + L'] rho^l
    if l > 0:
        body = rho ** (l - 1) * ((l - rho / 2) * lag + rho * dlag)
    else:
        body = -lag / 2 + dlag
    return _norm_const(n, l) * (2.0 / n) * np.exp(-rho / 2) * body


@dataclass(frozen=True, eq=False)
class RadialFunction:
    """A radial function sampled on a grid, with its weighted grid vector."""

    grid: RadialGrid
    values: np.ndarray = field(repr=False)

    @property
    def vector(self) -> np.ndarray:
        return self.grid.to_vector(self.values)

    def norm2(self) -> float:
        """``int |R|^2 r^2 dr`` on the grid."""
        z = self.vector
        return float(z @ z)


@dataclass(frozen=True, eq=False)
class HydrogenState:
    """Bound state ``phi_nlm``; ``energy`` is physical, ``radial`` reduced."""

    n: int
    l: int
    energy: float
    radial: RadialFunction
    reduced_energy: float

    @property
    def grid(self) -> RadialGrid:
        return self.radial.grid


def bound_state(n: int, l: int, params: Params, grid: RadialGrid) -> HydrogenState:
    """Sample the analytic state ``(n, l)`` on ``grid`` and normalize it."""
    _check_quantum_numbers(n, l)
    params.require_hydrogenic()
    values = radial_wavefunction(n, l, grid.nodes)
    raw = RadialFunction(grid, values)
    deficit = abs(raw.norm2() - 1.0)
    if deficit > NORM_TOL:
        raise GridError(
            f"grid cannot normalize state n={n}, l={l}: |norm - 1| = {deficit:.3g}"
        )
    values = values / math.sqrt(raw.norm2())
    e_red = -0.5 / n**2
    energy = params.m * params.betaZ**2 * e_red
    return HydrogenState(n, l, energy, RadialFunction(grid, values), e_red)


# -- gradient -----------------------------------------------------------------

def clebsch_gordan_1(l: int, m: int, q: int, L: int) -> float:
    """``<l m; 1 q | L m+q>`` for ``L = l +- 1`` (Condon-Shortley phases)."""
    if abs(m) > l or abs(m + q) > L or L < 0:
        return 0.0
    if L == l + 1:
        if q == 1:
            return math.sqrt((l + m + 1) * (l + m + 2) / ((2 * l + 1) * (2 * l + 2)))
        if q == 0:
            return math.sqrt((l - m + 1) * (l + m + 1) / ((2 * l + 1) * (l + 1)))
        if q == -1:
            return math.sqrt((l - m + 1) * (l - m + 2) / ((2 * l + 1) * (2 * l + 2)))
    if L == l - 1:
        if q == 1:
            return math.sqrt((l - m) * (l - m - 1) / (2 * l * (2 * l + 1)))
        if q == 0:
            return -math.sqrt((l - m) * (l + m) / (l * (2 * l + 1)))
        if q == -1:
            return math.sqrt((l + m) * (l + m - 1) / (2 * l * (2 * l + 1)))
    raise ValueError(f"unsupported coupling l={l}, q={q}, L={L}")


def gradient_coefficient(l: int, m: int, q: int, L: int) -> float:
    """Angular coefficient of channel ``L`` in ``grad_q (f Y_lm)``.

    ``grad_q (f Y_lm) = a_+ (f' - l f/r) Y_{l+1,m+q} + a_- (f' + (l+1) f/r) Y_{l-1,m+q}``
    with spherical components ``grad_{+-1} = -+(d_x +- i d_y)/sqrt(2)``.
    """
    if L == l + 1:
        return math.sqrt((l + 1) / (2 * l + 3)) * clebsch_gordan_1(l, m, q, L)
    if L == l - 1 and l > 0:
        return -math.sqrt(l / (2 * l - 1)) * clebsch_gordan_1(l, m, q, L)
    return 0.0


@dataclass(frozen=True, eq=False)
class GradientChannel:
    """Radial component of ``grad phi`` in channel ``L`` (reduced units).

    ``weight`` is the m-averaged angular factor, so the channel contributes
    ``weight * int |radial|^2 r^2 dr`` to ``<|grad phi|^2>``.
    """

    L: int
    radial: RadialFunction
    weight: float

    @property
    def vector(self) -> np.ndarray:
        return self.radial.vector


@dataclass(frozen=True, eq=False)
class GradientChannels:
    state: HydrogenState
    channels: tuple[GradientChannel, ...]

    def __iter__(self):
        return iter(self.channels)

    def __len__(self) -> int:
        return len(self.channels)

    @property
    def ls(self) -> tuple[int, ...]:
        return tuple(c.L for c in self.channels)

    def by_L(self, L: int) -> GradientChannel:
        for c in self.channels:
            if c.L == L:
                return c
        raise KeyError(L)

    def total_norm2(self) -> float:
        """``sum_L weight_L ||f_L||^2`` in reduced units."""
        return sum(c.weight * c.radial.norm2() for c in self.channels)


def gradient_channels(state: HydrogenState, params: Params | None = None) -> GradientChannels:
    """Decompose ``grad phi_nl`` into the ``l+1`` and ``l-1`` channels."""
    n, l = state.n, state.l
    grid = state.grid
    r = grid.nodes
    norm = math.sqrt(RadialFunction(grid, radial_wavefunction(n, l, r)).norm2())
    R = radial_wavefunction(n, l, r) / norm
    dR = radial_derivative(n, l, r) / norm
    chans = [GradientChannel(l + 1, RadialFunction(grid, dR - l * R / r), (l + 1) / (2 * l + 1))]
    if l > 0:
        chans.append(GradientChannel(l - 1, RadialFunction(grid, dR + (l + 1) * R / r), l / (2 * l + 1)))
    chans.sort(key=lambda c: c.L)
    return GradientChannels(state, tuple(chans))


@dataclass(frozen=True)
class SumRules:
    p2_expectation: float
    double_commutator: float


def sum_rules(
    state: HydrogenState,
    params: Params,
    decomps: dict | None = None,
) -> SumRules:
    """``sum_j <p_j phi|p_j phi>`` and ``sum_j <p_j phi|(h - e_n)|p_j phi>``.

    The second is evaluated as a spectral sum over the discrete channel
    Hamiltonians (``decomps`` maps ``L`` to a decomposition; missing channels
    use the equivalent direct quadratic form).
    """
    mbz = params.m * params.betaZ
    chans = gradient_channels(state, params)
    p2 = mbz**2 * chans.total_norm2()
    dc_red = 0.0
    for c in chans:
        z = c.vector
        if decomps and c.L in decomps:
            d = decomps[c.L]
            val = apply_operator_function(
                d, lambda e: e / d.energy_scale - state.reduced_energy, z
            )
        else:
            op = build_radial_hamiltonian(c.L, params, state.grid)
            val = float(z @ (op.reduced @ z)) - state.reduced_energy * float(z @ z)
        dc_red += c.weight * val
    # grad carries (m beta Z), h - e carries m (beta Z)^2
    return SumRules(p2, dc_red * mbz**2 * params.m * params.betaZ**2)
