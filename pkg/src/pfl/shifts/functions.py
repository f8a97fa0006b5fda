"""Scalar level-shift functions ``f(e, Lambda)`` and ``S(e)`` and the photon weights.

Photon momenta are in units of ``2m`` and the arguments ``e`` are excitation
energies divided by ``2m``.  After cancelling common factors both integrands
reduce to ``e/(e + k^2 + k) * [1/(k+1) + k^2/(k+1)^3]`` (up to the ``e``
prefactor for ``f``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..quadrature import QuadResult, integrate_adaptive, integrate_principal_value, integrate_semi_infinite

__all__ = [
    "FOUR_THIRDS_PI",
    "T_BOUND_CONSTANT",
    "FormFactorWeights",
    "f_function",
    "f_zero_closed",
    "s_function",
    "s_function_result",
    "s_function_array",
    "bethe_function",
    "t_bound_constant_quadrature",
    "PoleMergeError",
]

FOUR_THIRDS_PI = 4.0 / (3.0 * math.pi)
T_BOUND_CONSTANT = 16.0 / (9.0 * math.pi)
POLE_MERGE_ZONE = 1e-8


class PoleMergeError(ValueError):
    """Argument inside the excluded neighbourhood ``|1 + 4e| < 1e-8``."""


def _bracket(k):
    kp1 = 1.0 + k
    return 1.0 / kp1 + k * k / kp1**3


def f_function(e: float, Lambda: float, tol: float = 1e-12) -> float:
    """``(4/3pi) int_0^Lambda (k^2+k)/(e+k^2+k) [1/(k+1) + k^2/(k+1)^3] dk`` for ``e >= 0``."""
    if e < 0:
        raise ValueError("f is defined for e >= 0")
    if Lambda < 0:
        raise ValueError("Lambda must be non-negative")
    if Lambda == 0:
        return 0.0

    def g(k):
        s = k * k + k
        return s / (e + s) * _bracket(k)

    pts = [p for p in (e, math.sqrt(e), 1.0) if 0 < p < Lambda]
    if Lambda > 10:
        pts += list(np.geomspace(10.0, Lambda, int(math.log10(Lambda)) + 1)[:-1])
    res = integrate_adaptive(g, 0.0, Lambda, tol, abs_tol=0.0, points=pts)
    return FOUR_THIRDS_PI * res.value


def f_zero_closed(Lambda: float) -> float:
    """``f(0, Lambda) = (8/3pi) [ln(1+Lambda) - (3/4) Lambda (Lambda + 2/3)/(Lambda+1)^2]``."""
    if Lambda < 0:
        raise ValueError("Lambda must be non-negative")
    return 8.0 / (3.0 * math.pi) * (
        math.log1p(Lambda) - 0.75 * Lambda * (Lambda + 2.0 / 3.0) / (Lambda + 1.0) ** 2
    )


def s_function_result(e: float, tol: float = 1e-11) -> QuadResult:
    """:func:`s_function` with the quadrature diagnostics."""
    if not math.isfinite(e):
        raise ValueError("e must be finite")
    if e == 0.0:
        return QuadResult(0.0, 0.0, 1)
    if e > 0:
        def g(k):
            return e / (e + k * k + k) * _bracket(k)

        pts = sorted({min(e, 1.0), 1.0, math.sqrt(e)} - {0.0})
        res = integrate_semi_infinite(g, tol, abs_tol=0.0, points=pts)
        return res.scaled(FOUR_THIRDS_PI)
    if abs(1.0 + 4.0 * e) < POLE_MERGE_ZONE:
        raise PoleMergeError(f"S({e!r}) lies in the excluded zone |1+4e| < {POLE_MERGE_ZONE:g}")
    # e < 0: one positive root k1 of k^2 + k + e; the other root k2 < -1
    disc = math.sqrt(1.0 - 4.0 * e)
    k2 = -0.5 * (1.0 + disc)
    k1 = e / k2  # product of roots equals e; avoids cancellation
    def g(k):
        return e / ((k - k1) * (k - k2)) * _bracket(k)

    pts = [1.0] if k1 < 0.5 else []
    atol = 1e-2 * tol * min(-e, 1.0)
    res = integrate_principal_value(g, k1, 0.0, math.inf, tol, abs_tol=atol, points=pts)
    return res.scaled(FOUR_THIRDS_PI)


def s_function(e: float, tol: float = 1e-11) -> float:
    """Level-shift function ``S(e) = lim f(0, L) - f(e, L)``.

    For ``e < 0`` the integral has a simple pole at the positive root of
    ``k^2 + k + e`` and is taken as a Cauchy principal value.
    """
    return float(s_function_result(e, tol).value)


# trapezoid in t = ln k: the integrand is analytic in the strip |Im t| < pi,
# so the rule converges geometrically with rate exp(-2 pi^2 / h)
_LOG_STEP = 0.4
_LOG_MARGIN = 40.0


def s_function_array(e, tol: float = 1e-11) -> np.ndarray:
    """Vectorized :func:`s_function`.

    Positive arguments are integrated with the trapezoidal rule in ``ln k``
    on a common node set; negative arguments fall back to the adaptive
    principal-value routine one by one.
    """
    e = np.asarray(e, dtype=float)
    out = np.zeros_like(e)
    pos = e > 0
    if np.any(pos):
        ep = e[pos]
        t_lo = math.log(min(ep.min(), 1.0)) - _LOG_MARGIN
        t_hi = math.log(max(ep.max(), 1.0)) + _LOG_MARGIN
        t = np.arange(t_lo, t_hi + _LOG_STEP, _LOG_STEP)
        k = np.exp(t)
        w = _LOG_STEP * k * _bracket(k)
        den = ep[:, None] + (k * k + k)[None, :]
        out[pos] = FOUR_THIRDS_PI * ep * ((1.0 / den) @ w)
    for i in np.flatnonzero(e < 0):
        out.flat[i] = s_function(float(e.flat[i]), tol)
    return out


def bethe_function(e):
    """Small-argument form ``(4/3pi) e ln(1/|e|)`` (zero at ``e = 0``)."""
    e = np.asarray(e, dtype=float)
    out = np.zeros_like(e)
    nz = e != 0
    out[nz] = FOUR_THIRDS_PI * e[nz] * np.log(1.0 / np.abs(e[nz]))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class FormFactorWeights:
    """Photon kernels of the operator matrix ``T`` (``k`` in units of ``2m``).

    ``longitudinal(k) = 2|k| k_i k_j / (|k|^2+|k|)^2`` and
    ``transverse(k) = (|k|^2 delta_ij - k_i k_j)/|k|^3``.
    """

    def longitudinal(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        kn = np.linalg.norm(k)
        return 2.0 * kn * np.outer(k, k) / (kn * kn + kn) ** 2

    def transverse(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        kn = np.linalg.norm(k)
        return (kn * kn * np.eye(3) - np.outer(k, k)) / kn**3

    def tensor(self, k) -> np.ndarray:
        return self.longitudinal(k) + self.transverse(k)

    @staticmethod
    def along_axis(k):
        """Eigenvalues along and across ``k``: ``(2k/(1+k)^2, 1/k)``."""
        k = np.asarray(k, dtype=float)
        return 2.0 * k / (1.0 + k) ** 2, 1.0 / k


def t_bound_constant_quadrature(tol: float = 1e-12) -> QuadResult:
    """``(1/3pi^2) int d^3k k^4/(k^2+k)^2 (1/k^4 + 1/(k^2+k)^2)`` by quadrature."""

    def g(k):
        kp1 = 1.0 + k
        return 1.0 / kp1**2 + k * k / kp1**4

    return integrate_semi_infinite(g, tol).scaled(4.0 / (3.0 * math.pi))
