"""Free-electron sector: self-energy, dispersion relation and mass renormalization.

Photon momenta inside the integrals are measured in units of ``2 m0`` so the
cutoff enters through ``L = Lambda / (2 m0)``.  Everything here is first order
in the coupling ``alpha``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .quadrature import integrate_adaptive
from .units import ParameterError, Params

__all__ = [
    "MassRenormResult",
    "DispersionResult",
    "LeadingOrderWarning",
    "mass_bracket",
    "self_energy",
    "dispersion_shift",
    "dispersion_p2_coefficient",
    "physical_mass",
    "bare_mass",
    "dipole_mass",
    "resolve_bare_mass",
]


class LeadingOrderWarning(UserWarning):
    """Input lies where the first-order expansion is known to degrade."""


@dataclass(frozen=True)
class MassRenormResult:
    m: float
    m0: float
    alpha: float
    Lambda: float
    residual: float
    iterations: int


@dataclass(frozen=True)
class DispersionResult:
    P: tuple[float, float, float]
    shift: float
    p2_coefficient: float
    error_estimate: float = 0.0


def mass_bracket(L: float) -> float:
    """``ln(1+L) - (3/4) L (L + 2/3) / (1+L)^2`` with ``L = Lambda/(2 m0)``."""
    if L < 0:
        raise ValueError("cutoff ratio must be non-negative")
    return math.log1p(L) - 0.75 * (L / (1.0 + L)) * ((L + 2.0 / 3.0) / (1.0 + L))


def physical_mass(m0: float, alpha: float, Lambda: float) -> MassRenormResult:
    """Physical mass from the bare mass at first order in ``alpha``."""
    if not m0 > 0:
        raise ParameterError("m0 must be positive")
    if alpha < 0 or Lambda < 0:
        raise ParameterError("alpha and Lambda must be non-negative")
    m = m0 * (1.0 + alpha * 16.0 / (3.0 * math.pi) * mass_bracket(Lambda / (2.0 * m0)))
    return MassRenormResult(m=m, m0=m0, alpha=alpha, Lambda=Lambda, residual=0.0, iterations=0)


def bare_mass(m: float, alpha: float, Lambda: float, tol: float = 1e-14) -> MassRenormResult:
    """Invert :func:`physical_mass` for ``m0`` in ``(0, m]`` by Brent's method."""
    if not m > 0:
        raise ParameterError("m must be positive")
    if alpha == 0 or Lambda == 0:
        return MassRenormResult(m=m, m0=m, alpha=alpha, Lambda=Lambda, residual=0.0, iterations=0)

    def h(m0):
        return physical_mass(m0, alpha, Lambda).m - m

    hi = m
    if h(hi) == 0.0:
        return MassRenormResult(m=m, m0=m, alpha=alpha, Lambda=Lambda, residual=0.0, iterations=0)
    lo = 0.5 * m
    while h(lo) >= 0.0:
        lo *= 0.1
        if lo < m * 1e-300:
            raise RuntimeError("bare-mass inversion: no sign change down to m0 = 1e-300 m")
    m0, info = brentq(
        h, lo, hi, xtol=tol * m, rtol=max(tol, 4 * np.finfo(float).eps),
        maxiter=500, full_output=True, disp=False,
    )
    if not info.converged:
        raise RuntimeError(f"bare-mass inversion failed: {info.flag}")
    return MassRenormResult(
        m=m, m0=m0, alpha=alpha, Lambda=Lambda, residual=h(m0), iterations=info.iterations
    )


def resolve_bare_mass(params: Params) -> float:
    """``params.m0`` if set, otherwise the bare mass implied by ``params.m``."""
    if params.m0 is not None:
        return params.m0
    return bare_mass(params.m, params.alpha, params.Lambda).m0


def dipole_mass(m0: float, alpha: float, Lambda: float) -> float:
    """Physical mass in the dipole approximation, ``m0 + 4 alpha Lambda / (3 pi)``."""
    return m0 + 4.0 * alpha * Lambda / (3.0 * math.pi)


def self_energy(params: Params) -> float:
    """Vacuum self-energy ``(2 alpha/pi) (Lambda - 2 m0 ln(1 + Lambda/(2 m0)))``."""
    m0 = resolve_bare_mass(params)
    lam = params.Lambda
    return 2.0 * params.alpha / math.pi * (lam - 2.0 * m0 * math.log1p(lam / (2.0 * m0)))


def dispersion_p2_coefficient(params: Params) -> float:
    """Closed-form coefficient of ``|P|^2`` in the dispersion relation."""
    m0 = resolve_bare_mass(params)
    L = params.Lambda / (2.0 * m0)
    return 1.0 / (2.0 * m0) - 8.0 * params.alpha / (3.0 * math.pi * m0) * mass_bracket(L)


def _as_vector(P) -> np.ndarray:
    v = np.atleast_1d(np.asarray(P, dtype=float))
    if v.size == 1:
        return np.array([0.0, 0.0, float(v[0])])
    if v.shape != (3,):
        raise ValueError("P must be a scalar or a 3-vector")
    return v


def dispersion_shift(
    P,
    params: Params,
    tol: float = 1e-10,
    *,
    keep_pk: bool = True,
) -> DispersionResult:
    """Energy shift ``E_P - E_0`` of a free electron with total momentum ``P``.

    The photon integral over the ball ``|k| <= Lambda/(2 m0)`` is reduced by
    azimuthal symmetry around ``P`` to an iterated quadrature in ``|k|``
    (outer) and ``cos(theta)`` (inner).  With ``keep_pk=False`` the ``P.k``
    term is dropped from the denominator, which makes the result exactly
    quadratic in ``|P|``.
    """
    m0 = resolve_bare_mass(params)
    vec = _as_vector(P)
    p = float(np.linalg.norm(vec))
    if p >= m0:
        raise ParameterError(f"|P| = {p:g} must be below m0 = {m0:g}")
    if p > 0.5 * m0:
        warnings.warn(
            f"|P| = {p:g} exceeds m0/2; the first-order result is less reliable",
            LeadingOrderWarning,
            stacklevel=2,
        )
    coeff = dispersion_p2_coefficient(params)
    if p == 0.0:
        return DispersionResult(tuple(vec), 0.0, coeff, 0.0)
    v = p / m0 if keep_pk else 0.0
    L = params.Lambda / (2.0 * m0)
    if L == 0.0 or params.alpha == 0.0:
        return DispersionResult(tuple(vec), p * p / (2.0 * m0), coeff, 0.0)

    # d^3k = 2 pi k^2 dk dc; the k^2 and 1/k factors cancel analytically:
    # k/(k^2+k-v k c) * (1/k^2 + c^2 (2/(k^2+k)^2 - 1/k^4)) * k^2
    #   = (1 + c^2 (2 k^2/(1+k)^2 - 1)) / (k + 1 - v c)
    def inner(k: float) -> float:
        a = 2.0 * k * k / (1.0 + k) ** 2 - 1.0

        def g(c):
            return (1.0 + c * c * a) / (k + 1.0 - v * c)

        return integrate_adaptive(g, -1.0, 1.0, tol).value

    def outer(ks):
        return np.array([inner(float(k)) for k in np.ravel(ks)]).reshape(np.shape(ks))

    res = integrate_adaptive(outer, 0.0, L, tol)
    pref = params.alpha / (2.0 * math.pi**2 * m0) * 2.0 * math.pi * p * p
    shift = p * p / (2.0 * m0) - pref * res.value
    return DispersionResult(tuple(vec), shift, coeff, pref * res.error_estimate)
