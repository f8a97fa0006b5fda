"""Spectral S-term, Bethe approximation, Jensen bound and assembled shift reports.

Energies are physical (natural units); each report also carries the MHz
conversion.  Level quantities are computed on a grid and on its doubled
version and combined by Richardson extrapolation.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..hydrogen import GradientChannels, HydrogenState, bound_state, gradient_channels
from ..spectral import RadialGrid, SpectralDecomp, _reduced_decomp, richardson
from ..units import Params, to_frequency
from .functions import bethe_function, s_function, s_function_array
from .tterm import TTermResult, t_bound, t_term

__all__ = [
    "ShiftReport",
    "JensenBound",
    "LambSplitting",
    "s_term",
    "bethe_shift",
    "channel_decomps",
    "pv_arguments",
    "t_bound_for",
    "jensen_lower_bound",
    "binding_energy",
    "level_shift",
    "lamb_splitting",
    "LEADING_ORDER_CAVEAT",
]

LEADING_ORDER_CAVEAT = (
    "first order in alpha; excited-state levels use the principal-value "
    "continuation and are an expectation, not a theorem"
)
BETHE_CONVENTION = "bethe_approx uses (4/3pi) e ln(1/|e|) for every excitation e"


def channel_decomps(channels: GradientChannels) -> dict[int, SpectralDecomp]:
    """Reduced-unit decompositions for every gradient channel (cached)."""
    grid = channels.state.grid
    return {c.L: _reduced_decomp(c.L, grid) for c in channels}


def _spectral_args(state: HydrogenState, channels, decomps, params):
    """Per channel: squared overlaps and ``(E_i - e_n)/2m``."""
    kappa = 0.5 * params.betaZ**2
    out = []
    for c in channels:
        if c.L not in decomps:
            raise KeyError(f"no decomposition for channel L={c.L}")
        d = decomps[c.L]
        coef = d.coefficients(c.vector)
        args = kappa * (d.bound_levels() - state.reduced_energy)
        out.append((c.weight, coef * coef, args))
    return out


def _spectral_sum(state, channels, decomps, params, g) -> float:
    if params.alpha == 0.0:
        return 0.0
    total = 0.0
    for weight, c2, args in _spectral_args(state, channels, decomps, params):
        total += weight * float(np.dot(c2, g(args)))
    # (alpha/m) times |p|^2 scale (m beta Z)^2
    return params.alpha * params.m * params.betaZ**2 * total


def s_term(
    state: HydrogenState,
    channels: GradientChannels,
    decomps: dict[int, SpectralDecomp] | None,
    params: Params,
    tol: float = 1e-11,
) -> float:
    """``(alpha/m) sum_j <p_j phi| S((h - e_n)/2m) |p_j phi>`` as a spectral sum.

    Negative arguments (intermediate levels below ``e_n``) use the
    principal-value branch of ``S``.
    """
    decomps = decomps if decomps is not None else channel_decomps(channels)
    return _spectral_sum(state, channels, decomps, params, lambda e: s_function_array(e, tol))


def bethe_shift(
    state: HydrogenState,
    channels: GradientChannels,
    decomps: dict[int, SpectralDecomp] | None,
    params: Params,
) -> float:
    """:func:`s_term` with ``S(e)`` replaced by ``(4/3pi) e ln(1/|e|)``."""
    decomps = decomps if decomps is not None else channel_decomps(channels)
    return _spectral_sum(state, channels, decomps, params, bethe_function)


def pv_arguments(state, channels, decomps, params) -> tuple[float, ...]:
    """Distinct negative ``S`` arguments (principal-value poles) in use."""
    found = set()
    for _, c2, args in _spectral_args(state, channels, decomps, params):
        found.update(float(a) for a in args[(args < 0) & (c2 > 0)])
    return tuple(sorted(found))


# -- Jensen bound -------------------------------------------------------------

@dataclass(frozen=True)
class JensenBound:
    bound: float
    shift: float
    bound_MHz: float
    shift_MHz: float


def jensen_lower_bound(params: Params) -> JensenBound:
    """``(m/2)(beta Z)^2 - m alpha (beta Z)^2 S((beta Z)^2)`` and its shift part."""
    bz2 = params.betaZ**2
    shift = -params.m * params.alpha * bz2 * s_function(bz2) if params.alpha else 0.0
    bound = 0.5 * params.m * bz2 + shift
    return JensenBound(bound, shift, to_frequency(bound, params), to_frequency(shift, params))


# -- reports ------------------------------------------------------------------

@dataclass(frozen=True)
class ShiftReport:
    """Itemized radiative correction of one hydrogen level.

    ``convention="binding"``: ``total = coulomb_term - s_term + t_term``
    (binding energy, ground state).  ``convention="level"``:
    ``total = -coulomb_term + s_term - t_term`` (level energy).
    ``bethe_approx`` is the Bethe form of ``s_term``; ``jensen_bound`` is
    set for the ground state only.
    """

    n: int
    l: int
    convention: str
    coulomb_term: float
    s_term: float
    t_term: float
    t_method: str
    total: float
    bethe_approx: float
    jensen_bound: float | None
    in_MHz: dict
    convergence_error: float
    pv_poles: tuple[float, ...] = ()
    t_poles: tuple[float, ...] = ()
    grid_points: tuple[int, ...] = ()
    notes: tuple[str, ...] = ()
    details: dict = field(default_factory=dict)

    @property
    def radiative(self) -> float:
        """Radiative part in the report's convention."""
        sign = -1.0 if self.convention == "binding" else 1.0
        return sign * (self.s_term - self.t_term)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pv_poles"] = list(self.pv_poles)
        d["t_poles"] = list(self.t_poles)
        d["grid_points"] = list(self.grid_points)
        d["notes"] = list(self.notes)
        return d


@dataclass(frozen=True)
class _LevelParts:
    s: float
    t: TTermResult
    bethe: float
    pv: tuple[float, ...]
    step: float


def _level_parts(n, l, params, grid, tol, t_mode, L_max) -> _LevelParts:
    state = bound_state(n, l, params, grid)
    chans = gradient_channels(state, params)
    decomps = channel_decomps(chans)
    s = s_term(state, chans, decomps, params)
    b = bethe_shift(state, chans, decomps, params)
    t = t_term(state, chans, decomps, params, mode=t_mode, tol=tol, L_max=L_max)
    pv = pv_arguments(state, chans, decomps, params)
    return _LevelParts(s, t, b, pv, grid.step)


def _extrapolate(coarse: _LevelParts, fine: _LevelParts):
    ratio = fine.step / coarse.step
    s, es = richardson(coarse.s, fine.s, ratio)
    b, _ = richardson(coarse.bethe, fine.bethe, ratio)
    if fine.t.mode == "bound":
        t, et = fine.t.value, 0.0
    else:
        t, et = richardson(coarse.t.value, fine.t.value, ratio)
    err = math.hypot(es, et) + fine.t.error_estimate
    return s, t, b, err


def _report(n, l, convention, params, grid, tol, t_mode, L_max, extrapolate) -> ShiftReport:
    params.require_hydrogenic()
    grid = grid or RadialGrid()
    coulomb = 0.5 * params.m * params.betaZ**2 / n**2
    coarse = _level_parts(n, l, params, grid, tol, t_mode, L_max)
    grids = (grid.n_points,)
    details = {"t_details": coarse.t.details}
    if extrapolate and params.alpha != 0.0:
        fine = _level_parts(n, l, params, grid.doubled(), tol, t_mode, L_max)
        s, t, b, err = _extrapolate(coarse, fine)
        grids = (grid.n_points, 2 * grid.n_points)
        details["unextrapolated"] = {"s_term": fine.s, "t_term": fine.t.value, "bethe_approx": fine.bethe}
    else:
        s, t, b = coarse.s, coarse.t.value, coarse.bethe
        err = coarse.t.error_estimate
    if convention == "binding":
        total = coulomb - s + t
        jensen = jensen_lower_bound(params).bound if n == 1 else None
    else:
        total = -coulomb + s - t
        jensen = None
    fields = {
        "coulomb_term": coulomb,
        "s_term": s,
        "t_term": t,
        "total": total,
        "bethe_approx": b,
        "convergence_error": err,
    }
    if jensen is not None:
        fields["jensen_bound"] = jensen
    if n == 1:
        fields["jensen_shift"] = jensen_lower_bound(params).shift
    in_mhz = {k: to_frequency(v, params) for k, v in fields.items()}
    kappa = 0.5 * params.betaZ**2
    return ShiftReport(
        n=n,
        l=l,
        convention=convention,
        coulomb_term=coulomb,
        s_term=s,
        t_term=t,
        t_method=t_mode,
        total=total,
        bethe_approx=b,
        jensen_bound=jensen,
        in_MHz=in_mhz,
        convergence_error=err,
        pv_poles=coarse.pv,
        t_poles=tuple(p for p in coarse.t.poles) if t_mode == "leading" else (),
        grid_points=grids,
        notes=(LEADING_ORDER_CAVEAT, BETHE_CONVENTION),
        details=details | {"kappa": kappa},
    )


def binding_energy(
    params: Params,
    grid: RadialGrid | None = None,
    tol: float = 1e-7,
    *,
    t_mode: str = "leading",
    L_max: int = 4,
    extrapolate: bool = True,
) -> ShiftReport:
    """Renormalized ground-state binding energy ``E(0) - E(V)``."""
    return _report(1, 0, "binding", params, grid, tol, t_mode, L_max, extrapolate)


def level_shift(
    n: int,
    l: int,
    params: Params,
    grid: RadialGrid | None = None,
    tol: float = 1e-7,
    *,
    t_mode: str = "leading",
    L_max: int = 4,
    extrapolate: bool = True,
) -> ShiftReport:
    """Level energy ``-m(beta Z)^2/2n^2 + s_term - t_term`` of ``phi_{n,l}``."""
    if t_mode == "bound" and n > 1:
        raise ValueError("the T bound holds for the ground state only")
    return _report(n, l, "level", params, grid, tol, t_mode, L_max, extrapolate)


@dataclass(frozen=True)
class LambSplitting:
    value: float
    value_MHz: float
    convergence_error: float
    convergence_error_MHz: float
    level_2s: ShiftReport
    level_2p: ShiftReport


def lamb_splitting(
    params: Params,
    grid: RadialGrid | None = None,
    tol: float = 1e-7,
    *,
    t_mode: str = "leading",
    L_max: int = 4,
    extrapolate: bool = True,
) -> LambSplitting:
    """Radiative 2s - 2p splitting (the Coulomb parts cancel identically)."""
    s2 = level_shift(2, 0, params, grid, tol, t_mode=t_mode, L_max=L_max, extrapolate=extrapolate)
    p2 = level_shift(2, 1, params, grid, tol, t_mode=t_mode, L_max=L_max, extrapolate=extrapolate)
    value = s2.radiative - p2.radiative
    err = math.hypot(s2.convergence_error, p2.convergence_error)
    return LambSplitting(
        value, to_frequency(value, params), err, to_frequency(err, params), s2, p2
    )


def t_bound_for(params: Params, grid: RadialGrid | None = None):
    """Minimized T bound of the ground state."""
    state = bound_state(1, 0, params, grid or RadialGrid())
    return t_bound(state, gradient_channels(state, params), params)
