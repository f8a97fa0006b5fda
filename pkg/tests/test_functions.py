import math

import mpmath as mp
import numpy as np
import pytest

from pfl.shifts.functions import (
    FOUR_THIRDS_PI,
    T_BOUND_CONSTANT,
    FormFactorWeights,
    PoleMergeError,
    bethe_function,
    f_function,
    f_zero_closed,
    s_function,
    s_function_array,
    t_bound_constant_quadrature,
)

mp.mp.dps = 30


def _bracket(k):
    return 1 / (1 + k) + k * k / (1 + k) ** 3


def s_oracle(e):
    """High-precision S(e) for e > 0 (or its principal value for e < 0)."""
    e = mp.mpf(e)
    if e > 0:
        val = mp.quad(lambda k: e / (e + k * k + k) * _bracket(k), [0, min(e, 1), 1, mp.inf])
        return float(FOUR_THIRDS_PI * val)
    disc = mp.sqrt(1 - 4 * e)
    k2 = -(1 + disc) / 2
    k1 = e / k2

    def g(k):
        return e * _bracket(k) / (k - k2)

    g1 = g(k1)
    near = mp.quad(lambda k: (g(k) - g1) / (k - k1), [0, k1, 2 * k1])
    far = mp.quad(lambda k: g(k) / (k - k1), [2 * k1, 2 * k1 + 1, mp.inf])
    return float(FOUR_THIRDS_PI * (near + far))


def test_f_trivial():
    assert f_function(0.3, 0.0) == 0.0
    with pytest.raises(ValueError):
        f_function(-1.0, 1.0)


@pytest.mark.parametrize("lam", [0.5, 1.0, 10.0, 1e3, 1e6])
def test_f_zero_closed_form(lam):
    assert f_function(0.0, lam, 1e-12) == pytest.approx(f_zero_closed(lam), rel=1e-10)


def test_f_zero_closed_values():
    assert f_zero_closed(0.0) == 0.0
    assert f_zero_closed(1.0) == pytest.approx(8 / (3 * math.pi) * (math.log(2) - 0.3125), rel=1e-15)
    for lam in (1e4, 1e6, 1e8):
        gap = f_zero_closed(lam) - 8 / (3 * math.pi) * (math.log(lam) - 0.75)
        assert abs(gap) < 10 / lam


def test_f_monotone_in_e_and_lambda():
    es = [0.0, 0.01, 0.1, 1.0, 10.0]
    fs = [f_function(e, 50.0) for e in es]
    assert all(a > b for a, b in zip(fs, fs[1:]))
    diffs = [f_zero_closed(L) - f_function(1.0, L) for L in (1.0, 10.0, 100.0, 1e4)]
    assert all(a < b for a, b in zip(diffs, diffs[1:]))


@pytest.mark.parametrize("e", [0.1, 1.0, 10.0])
def test_s_is_limit_of_f_difference(e):
    lam = 1e6
    assert f_zero_closed(lam) - f_function(e, lam, 1e-13) == pytest.approx(s_function(e), abs=1e-4)


@pytest.mark.parametrize("e", [1e-12, 1e-6, 1e-3, 0.5, 3.0, 1e3, 1e8])
def test_s_against_high_precision(e):
    assert s_function(e) == pytest.approx(s_oracle(e), rel=1e-10)


@pytest.mark.parametrize("e", [-1e-8, -1e-4, -0.1, -0.2, -0.3, -2.0, -100.0])
def test_s_principal_value(e):
    assert s_function(e) == pytest.approx(s_oracle(e), rel=1e-9)


def test_s_zero_and_continuity():
    assert s_function(0.0) == 0.0
    assert s_function(1e-9) == pytest.approx(-s_function(-1e-9), rel=1e-3)


def test_s_pole_merge_zone():
    with pytest.raises(PoleMergeError):
        s_function(-0.25)
    with pytest.raises(PoleMergeError):
        s_function(-0.25 + 1e-10)
    assert math.isfinite(s_function(-0.25 - 1e-6))


def test_s_small_argument_form():
    # S(e) = (4/3pi) e [ln(1/e) - 5/6] + o(e); the ratio to the leading form tends to 1
    ratios = [s_function(e) / (FOUR_THIRDS_PI * e * math.log(1 / e)) for e in (1e-4, 1e-6, 1e-8, 1e-10)]
    assert all(a < b < 1 for a, b in zip(ratios, ratios[1:]))
    for e in (1e-6, 1e-9):
        sub = s_function(e) / (FOUR_THIRDS_PI * e) - math.log(1 / e)
        assert sub == pytest.approx(-5 / 6, abs=1e-4)


def test_s_large_argument_form():
    # S(e) = (4/3pi) [ln e - 3/2] + o(1)
    ratios = [s_function(e) / (FOUR_THIRDS_PI * math.log(e)) for e in (1e4, 1e8, 1e12)]
    assert all(a < b < 1 for a, b in zip(ratios, ratios[1:]))
    assert s_function(1e10) / FOUR_THIRDS_PI - math.log(1e10) == pytest.approx(-1.5, abs=1e-4)


def test_s_monotone_concave():
    e = np.geomspace(1e-6, 1e6, 40)
    s = s_function_array(e)
    assert np.all(np.diff(s) > 0)
    rng = np.random.default_rng(5)
    for _ in range(50):
        a, b = np.sort(rng.uniform(0, 1e6, 2) * rng.choice([1e-6, 1e-3, 1.0]))
        mid = s_function(0.5 * (a + b))
        assert mid >= 0.5 * (s_function(a) + s_function(b)) - 1e-11


def test_s_array_matches_scalar():
    e = np.concatenate([-np.geomspace(1e-7, 0.2, 5), [0.0], np.geomspace(1e-14, 1e12, 60)])
    ref = np.array([s_function(x) for x in e])
    got = s_function_array(e)
    assert np.allclose(got, ref, rtol=1e-10, atol=0)


def test_bethe_function():
    assert bethe_function(0.0) == 0.0
    assert bethe_function(1e-3) == pytest.approx(FOUR_THIRDS_PI * 1e-3 * math.log(1e3))
    assert bethe_function(-1e-3) == pytest.approx(-FOUR_THIRDS_PI * 1e-3 * math.log(1e3))


def test_form_factor_weights():
    w = FormFactorWeights()
    k = np.array([0.3, -0.2, 0.9])
    kn = np.linalg.norm(k)
    for m in (w.longitudinal(k), w.transverse(k), w.tensor(k)):
        assert np.all(np.linalg.eigvalsh(m) >= -1e-15)
    assert np.trace(w.transverse(k)) == pytest.approx(2 / kn)
    a, b = w.along_axis(kn)
    assert k @ w.tensor(k) @ k / kn**2 == pytest.approx(a)
    perp = np.cross(k, [1.0, 0.0, 0.0])
    perp /= np.linalg.norm(perp)
    assert perp @ w.tensor(k) @ perp == pytest.approx(b)


def test_t_bound_constant():
    assert t_bound_constant_quadrature().value == pytest.approx(T_BOUND_CONSTANT, rel=1e-10)
    assert T_BOUND_CONSTANT == 16 / (9 * math.pi)
