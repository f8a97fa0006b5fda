"""The operator-matrix correction ``T``: rigorous bound, leading and full evaluation.

With the photon momentum fixed along ``z`` (the angular average over ``k``
is traded for an average over the magnetic quantum number ``m``), the
contribution of one ``|k|`` is

    k^4 * avg_m sum_q w_q(k) <g_q| M^{-1} |g_q>,      g_q = d_z R grad_q phi,

with ``w_0 = 2k/(1+k)^2``, ``w_{+-1} = 1/k``, ``R = (h' + k^2 + k)^{-1}``
(``h' = (h - e_n)/2m``) and ``M = R^{-1} - c^2 d_z^T R d_z``, ``c = k beta Z``
in reduced units.  ``leading`` replaces ``M^{-1}`` by ``R``; ``resolvent``
uses ``M^{-1} g = Re[(R^{-1} - i c d_z)^{-1} g]`` and a sparse coupled-channel
solve.  The ``k`` integral is done in ``s = k^2 + k`` where every resolvent
pole is a pole in ``s``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.linalg as sla
from scipy.optimize import minimize_scalar

from ..hydrogen import GradientChannels, HydrogenState, gradient_coefficient, sum_rules
from ..quadrature import QuadResult, QuadratureError, integrate_with_poles
from ..spectral import (
    RadialGrid,
    SpectralDecomp,
    _reduced_decomp,
    _reduced_operator,
    derivative_operator,
    dz_coefficient,
)
from ..units import Params
from .functions import T_BOUND_CONSTANT

__all__ = [
    "TBound",
    "TTermResult",
    "PartialWaveError",
    "t_bound",
    "t_term",
    "t_integrand",
]

T_MODES = ("bound", "leading", "resolvent")


class PartialWaveError(RuntimeError):
    """Partial-wave truncation did not converge; ``result`` holds the estimate."""

    def __init__(self, message: str, result: "TTermResult"):
        super().__init__(message)
        self.result = result


@dataclass(frozen=True)
class TBound:
    value: float
    epsilon: float


@dataclass(frozen=True)
class TTermResult:
    value: float
    mode: str
    error_estimate: float = 0.0
    poles: tuple[float, ...] = ()
    details: dict = field(default_factory=dict)


# -- bound ------------------------------------------------------------------

def _bound_value(eps: float, dc: float, p2: float, e_abs: float, params: Params) -> float:
    pref = params.alpha / params.m * 2.0 / (eps * params.m) * T_BOUND_CONSTANT
    return pref * (dc + e_abs * p2 * eps / (1.0 - eps))


def t_bound(
    state: HydrogenState,
    channels: GradientChannels | None,
    params: Params,
    epsilon: float | None = None,
) -> TBound:
    """Upper bound on the ``T`` contribution from the kinetic-energy estimate.

    ``(alpha/m) (2/(eps m)) (16/9pi) sum_j <p_j phi|(h - e_n/(1-eps))|p_j phi>``
    assembled from the two sum rules.  With ``epsilon=None`` the bound is
    minimized over ``0 < eps < 1``.  The estimate is rigorous for the ground
    state, where ``h - e_n >= 0``.
    """
    if epsilon is not None and not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    if params.alpha == 0.0:
        return TBound(0.0, 2.0 / 3.0 if epsilon is None else epsilon)
    rules = sum_rules(state, params)
    dc = max(rules.double_commutator, 0.0)
    p2 = rules.p2_expectation
    e_abs = abs(state.energy)

    def f(eps):
        return _bound_value(eps, dc, p2, e_abs, params)

    if epsilon is not None:
        return TBound(f(epsilon), epsilon)
    grid = np.linspace(1e-3, 1 - 1e-3, 999)
    vals = np.array([f(x) for x in grid])
    i = int(np.argmin(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    if i == 0:
        lo = 1e-12
    res = minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    eps = float(res.x) if res.fun <= vals[i] else float(grid[i])
    return TBound(f(eps), eps)


# -- spectral setup ---------------------------------------------------------

@dataclass
class _Channel:
    decomp: SpectralDecomp
    eps: np.ndarray  # h' eigenvalues (dimensionless)


class _TSetup:
    """Decompositions, angular weights and radial couplings for one state."""

    def __init__(self, state: HydrogenState, channels: GradientChannels, params: Params, L_max: int):
        self.state = state
        self.grid: RadialGrid = state.grid
        self.params = params
        self.l = state.l
        self.kappa = 0.5 * params.betaZ**2
        self.c_scale = params.betaZ
        self.e_red = state.reduced_energy
        self.outer = {c.L: c for c in channels}
        self.middle = sorted({J for L in self.outer for J in (L - 1, L + 1) if J >= 0})
        self.L_max = max(L_max, max(self.middle))
        self._chan: dict[int, _Channel] = {}
        self.coef = {L: self._decomp(L).decomp.coefficients(c.vector) for L, c in self.outer.items()}

    def _decomp(self, L: int) -> _Channel:
        if L not in self._chan:
            d = _reduced_decomp(L, self.grid)
            eps = self.kappa * (d.bound_levels() - self.e_red)
            self._chan[L] = _Channel(d, eps)
        return self._chan[L]

    def radial_op(self, J: int, L: int) -> sp.csr_matrix:
        """Radial part of ``d/dz`` from channel ``L`` to ``J = L +- 1``."""
        if J == L + 1:
            return derivative_operator(L, self.grid)
        return (-derivative_operator(J, self.grid).T).tocsr()

    @staticmethod
    def z_coupling(J: int, L: int, M: int) -> float:
        return dz_coefficient(min(J, L), M)

    def pairs(self):
        return [(J, L) for J in self.middle for L in self.outer if abs(J - L) == 1]

    def angular_weights(self):
        """``{(|M|, q_class): {((J,L),(J',L')): weight}}`` averaged over ``m``.

        ``q_class`` is 0 for ``q = 0`` and 1 for ``q = +-1``.
        """
        l = self.l
        out: dict = {}
        for m in range(-l, l + 1):
            for q in (-1, 0, 1):
                M = m + q
                beta = {}
                for J, L in self.pairs():
                    if abs(M) > J or abs(M) > L:
                        continue
                    b = gradient_coefficient(l, m, q, L) * self.z_coupling(J, L, M)
                    if b != 0.0:
                        beta[(J, L)] = b
                key = (abs(M), 0 if q == 0 else 1)
                acc = out.setdefault(key, {})
                for p1, b1 in beta.items():
                    for p2, b2 in beta.items():
                        acc[(p1, p2)] = acc.get((p1, p2), 0.0) + b1 * b2 / (2 * l + 1)
        return out

    def poles(self, channels) -> list[float]:
        """Positive ``s`` where some resolvent ``(h' + s)^{-1}`` is singular."""
        ps = set()
        for L in channels:
            eps = self._decomp(L).eps
            ps.update(float(-e) for e in eps[eps < 0])
        return sorted(ps)

    def outer_resolved(self, s: np.ndarray) -> dict[int, np.ndarray]:
        """``R_L grad phi`` per outer channel for every ``s`` (columns)."""
        out = {}
        for L, c in self.coef.items():
            ch = self._decomp(L)
            out[L] = ch.decomp.eigenvectors @ (c[:, None] / (ch.eps[:, None] + s[None, :]))
        return out


def _k_of_s(s):
    return 2.0 * s / (1.0 + np.sqrt(1.0 + 4.0 * s))


def _weights_k(k):
    return 2.0 * k / (1.0 + k) ** 2, 1.0 / k


# -- leading mode -----------------------------------------------------------

def _leading_integrand(setup: _TSetup):
    weights = setup.angular_weights()
    # collapse |M|: leading mode does not depend on it
    w0: dict = {}
    w1: dict = {}
    for (absM, qc), acc in weights.items():
        tgt = w0 if qc == 0 else w1
        for key, v in acc.items():
            tgt[key] = tgt.get(key, 0.0) + v
    pairs = setup.pairs()

    def integrand(s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        shape = s.shape
        s = s.ravel()
        k = _k_of_s(s)
        a, b = _weights_k(k)
        u = setup.outer_resolved(s)
        y = {}
        for J, L in pairs:
            ch = setup._decomp(J)
            y[(J, L)] = ch.decomp.eigenvectors.T @ (setup.radial_op(J, L) @ u[L])
        total = np.zeros_like(s)
        for p1, p2 in sorted(set(w0) | set(w1)):
            if p1[0] != p2[0]:
                continue
            ch = setup._decomp(p1[0])
            gam = np.sum(y[p1] * y[p2] / (ch.eps[:, None] + s[None, :]), axis=0)
            total += gam * (a * w0.get((p1, p2), 0.0) + b * w1.get((p1, p2), 0.0))
        jac = 1.0 / np.sqrt(1.0 + 4.0 * s)
        return (k**4 * total * jac).reshape(shape)

    return integrand


# -- resolvent mode ---------------------------------------------------------

class _CoupledSystem:
    """Banded ``(R^{-1} - i c d_z)`` over channels ``|M|..L_max``.

    Unknowns are interleaved by grid point so the coupled matrix is banded.
    With ``sigma = s/kappa - e`` it is ``A0 + sigma A1 - i c A2`` in the
    Numerov-transformed variables.
    """

    def __init__(self, setup: _TSetup, absM: int):
        self.setup = setup
        self.absM = absM
        self.channels = list(range(absM, setup.L_max + 1))
        self.index = {J: i for i, J in enumerate(self.channels)}
        grid = setup.grid
        self.n = n = grid.n_points
        self.g = grid.metric
        self.ops = {J: _reduced_operator(J, grid) for J in self.channels}
        nch = len(self.channels)
        gmat = sp.diags(self.g)
        kap = setup.kappa
        b0 = [[None] * nch for _ in range(nch)]
        b1 = [[None] * nch for _ in range(nch)]
        b2 = [[sp.csr_matrix((n, n))] * nch for _ in range(nch)]
        for J in self.channels:
            i = self.index[J]
            op = self.ops[J]
            b0[i][i] = kap * op.shifted_system(0.0)
            b1[i][i] = kap * (op.b @ sp.diags(self.g * self.g))
            for L in (J - 1, J + 1):
                if L in self.index:
                    cz = dz_coefficient(min(J, L), absM)
                    b2[i][self.index[L]] = cz * (op.b @ gmat @ setup.radial_op(J, L) @ gmat)
        # interleave: new index = point * nch + channel
        perm = (np.arange(nch)[None, :] * n + np.arange(n)[:, None]).ravel()
        mats = [sp.bmat(b, format="csr")[perm][:, perm].tocoo() for b in (b0, b1, b2)]
        self.lower = max(int(np.max(m.row - m.col)) for m in mats)
        self.upper = max(int(np.max(m.col - m.row)) for m in mats)
        size = n * nch
        self.bands = []
        for m in mats:
            ab = np.zeros((self.lower + self.upper + 1, size))
            np.add.at(ab, (self.upper + m.row - m.col, m.col), m.data)
            self.bands.append(ab)
        self.perm = perm
        self.size = size

    def solve_real(self, s: float, c: float, rhs: dict[int, np.ndarray]) -> dict[int, np.ndarray]:
        """``Re[(X - i c D)^{-1} g]`` for ``g`` given per channel (columns)."""
        st = self.setup
        sigma = s / st.kappa - st.e_red
        a0, a1, a2 = self.bands
        ab = a0 + sigma * a1 - 1j * c * a2
        ncol = next(iter(rhs.values())).shape[1]
        full = np.zeros((self.size, ncol), dtype=complex)
        for J, v in rhs.items():
            i = self.index[J]
            full[i * self.n:(i + 1) * self.n] = self.ops[J].b @ (self.g[:, None] * v)
        y = np.empty_like(full)
        y[self.perm] = sla.solve_banded((self.lower, self.upper), ab, full[self.perm])
        out = {}
        for J in self.channels:
            i = self.index[J]
            out[J] = self.g[:, None] * y[i * self.n:(i + 1) * self.n].real
        return out


def _resolvent_integrand(setup: _TSetup):
    weights = setup.angular_weights()
    systems = {absM: _CoupledSystem(setup, absM) for absM, _ in weights}
    pairs = setup.pairs()

    def one(s: float) -> float:
        k = float(_k_of_s(s))
        a, b = _weights_k(k)
        c = k * setup.c_scale
        u = setup.outer_resolved(np.array([s]))
        g = {(J, L): setup.radial_op(J, L) @ u[L][:, 0] for J, L in pairs}
        total = 0.0
        for absM, system in systems.items():
            used = [p for p in pairs if p[0] in system.index]
            if not used:
                continue
            cols = {}
            rhs = {}
            for j, (J, L) in enumerate(used):
                cols[(J, L)] = j
            for J in {p[0] for p in used}:
                rhs[J] = np.zeros((setup.grid.n_points, len(used)))
            for (J, L), j in cols.items():
                rhs[J][:, j] = g[(J, L)]
            sol = system.solve_real(s, c, rhs)
            for qc, wq in ((0, a), (1, b)):
                acc = weights.get((absM, qc))
                if not acc:
                    continue
                for (p1, p2), v in acc.items():
                    if p1 not in cols or p2 not in cols:
                        continue
                    gam = float(g[p1] @ sol[p1[0]][:, cols[p2]])
                    total += wq * v * gam
        return k**4 * total / math.sqrt(1.0 + 4.0 * s)

    def integrand(s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        return np.array([one(float(x)) for x in s.ravel()]).reshape(s.shape)

    return integrand


def t_integrand(state, channels, params, mode: str = "leading", L_max: int = 4):
    """Integrand in ``s = k^2 + k`` (reduced units) and the pole list."""
    setup = _TSetup(state, channels, params, L_max)
    if mode == "leading":
        chans = sorted(set(setup.outer) | set(setup.middle))
        return _leading_integrand(setup), setup.poles(chans), setup
    if mode == "resolvent":
        if state.n != 1:
            raise ValueError(
                "resolvent mode needs a state without lower intermediate levels "
                "(use mode='leading' for excited states)"
            )
        return _resolvent_integrand(setup), [], setup
    raise ValueError(f"unknown T mode {mode!r}")


def _integrate_t(integrand, poles, kappa: float, tol: float) -> QuadResult:
    pts = sorted({kappa * f for f in (1e-2, 1e-1, 1.0, 10.0, 100.0)} | {1.0, 100.0})
    pts = [p for p in pts if all(abs(p - q) > 1e-3 * q for q in poles)]
    return integrate_with_poles(
        integrand, poles, 0.0, math.inf, tol, finite_part=True, points=pts, abs_tol=0.0
    )


def t_term(
    state: HydrogenState,
    channels: GradientChannels,
    decomps=None,
    params: Params | None = None,
    mode: str = "leading",
    tol: float = 1e-7,
    L_max: int = 4,
    *,
    lmax_rtol: float = 0.05,
    check_lmax: bool = True,
) -> TTermResult:
    """``(alpha/m) sum_ij <p_i phi| T_ij |p_j phi>`` on the state's grid.

    ``decomps`` is accepted for interface symmetry with :func:`s_term`; the
    decompositions are taken from the shared cache for the state's grid.
    In ``resolvent`` mode the calculation is repeated with ``L_max + 1`` and
    the difference is reported (and checked against ``lmax_rtol``).
    """
    if params is None:
        raise ValueError("params required")
    if mode not in T_MODES:
        raise ValueError(f"unknown T mode {mode!r}")
    if mode == "bound":
        b = t_bound(state, channels, params)
        return TTermResult(b.value, "bound", 0.0, (), {"epsilon": b.epsilon})
    if mode == "resolvent" and L_max < 2:
        raise ValueError("resolvent mode needs L_max >= 2")
    if params.alpha == 0.0:
        return TTermResult(0.0, mode)
    pref = params.alpha * params.m * params.betaZ**4 * 2.0 / math.pi
    integrand, poles, setup = t_integrand(state, channels, params, mode, L_max)
    res = _integrate_t(integrand, poles, setup.kappa, tol)
    value = pref * res.value
    err = pref * res.error_estimate
    details = {"evaluations": res.evaluations, "L_max": setup.L_max}
    if mode == "resolvent" and check_lmax:
        integrand2, _, setup2 = t_integrand(state, channels, params, mode, setup.L_max + 1)
        res2 = _integrate_t(integrand2, poles, setup2.kappa, tol)
        value2 = pref * res2.value
        details["lmax_difference"] = abs(value2 - value)
        details["value_lmax_plus_1"] = value2
        err = max(err, abs(value2 - value))
        result = TTermResult(value, mode, err, tuple(p / setup.kappa for p in poles), details)
        if abs(value2 - value) > lmax_rtol * abs(value2):
            raise PartialWaveError(
                f"T term not converged in L_max: {value:.6g} vs {value2:.6g}", result
            )
        return result
    return TTermResult(value, mode, err, tuple(poles), details)


__all__ += ["QuadratureError"]
