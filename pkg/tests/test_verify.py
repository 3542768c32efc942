import math

import numpy as np
import pytest
from scipy import integrate

from parabmo import kernels, verify
from parabmo.corpus import Corpus
from parabmo.seminorms import lp_norm
from parabmo.spectral import SpaceTimeField, SpectralGrid
from parabmo.symbols import RoughCoefficient, fractional, heat, model_symbol

GRID = SpectralGrid(1, 1024, 40.0)


def _abs_K(z, sig):
    return abs(kernels.heat_K(z, sig))


def _tail_oracle(duration, c):
    def inner(sig):
        z0 = math.sqrt(2 * sig)  # sign change of the heat K
        cuts = [c, z0, np.inf] if z0 > c else [c, np.inf]
        return 2 * sum(integrate.quad(_abs_K, a, b, args=(sig,), epsabs=0, epsrel=1e-12)[0]
                       for a, b in zip(cuts, cuts[1:]))
    return integrate.quad(inner, 0, duration, epsabs=0, epsrel=1e-10, limit=200)[0]


def _shift_oracle(lag, h):
    def inner(sig):
        return integrate.quad(lambda z: abs(kernels.heat_K(z + h, sig) - kernels.heat_K(z, sig)),
                              -np.inf, np.inf, epsabs=0, epsrel=1e-11, limit=400)[0]
    return integrate.quad(inner, lag, np.inf, epsabs=0, epsrel=1e-9, limit=200)[0]


def _time_oracle(s, r, a):
    def inner(tau):
        return integrate.quad(lambda z: abs(kernels.heat_K(z, s - tau) - kernels.heat_K(z, r - tau)),
                              -np.inf, np.inf, epsabs=0, epsrel=1e-11, limit=400)[0]
    return integrate.quad(inner, -np.inf, a, epsabs=0, epsrel=1e-9, limit=200)[0]


def test_integrate_H():
    xi = np.logspace(-3, 3, 25)
    for nu, g in ((0.5, 1.5), (1.0, 2.0), (2.0, 0.4)):
        assert np.max(np.abs(verify.integrate_H(nu, g, xi) - 1 / nu)) < 1e-12


def test_check_assumption1_heat():
    rep = verify.check_assumption1(model_symbol(0.7, 1.5), GRID, np.logspace(-3, 1, 9))
    assert rep.passed and rep.measurements["majorant_violations"] == 0
    with pytest.raises(ValueError):
        verify.check_assumption1(heat(), GRID, [0.1, 1.0])


@pytest.mark.parametrize("c", [0.5, 2.0])
def test_tail_mass_heat(c):
    got = verify.tail_mass(heat(), GRID, 0.0, 1.0, c).value
    assert got == pytest.approx(_tail_oracle(1.0, c), rel=1e-4)


def test_shift_difference_heat():
    got = verify.shift_difference(heat(), GRID, 1.0, 0.0, 0.2).value
    assert got == pytest.approx(_shift_oracle(1.0, 0.2), rel=1e-4)
    assert verify.shift_difference(heat(), GRID, 1.0, 0.0, 0.0).value == 0.0


def test_time_difference_heat():
    got = verify.time_difference(heat(), GRID, 1.2, 1.0, 0.0).value
    assert got == pytest.approx(_time_oracle(1.2, 1.0, 0.0), rel=1e-4)
    assert verify.time_difference(heat(), GRID, 1.0, 1.0, 0.0).value == 0.0
    with pytest.raises(ValueError):
        verify.time_difference(heat(), GRID, 1.0, 1.2, 0.0)


def test_scaling_identity():
    coef = RoughCoefficient((0.3,), (1.0, 2.0))
    assert verify.scaling_identity(fractional(1.5, coef), 0.0, 0.8, GRID) < 1e-10


def test_reflect_is_involution():
    g = SpectralGrid(1, 16, 4.0)
    t = np.linspace(-1, 1, 5)
    rng = np.random.default_rng(0)
    f = SpaceTimeField(g, t, rng.normal(size=(5, 16)))
    assert np.array_equal(verify.reflect(verify.reflect(f)).values, f.values)
    r = verify.reflect(f).values
    # x_j -> -x_j about the origin index N/2
    assert r[0, 8] == f.values[-1, 8] and r[0, 9] == f.values[-1, 7]
    with pytest.raises(ValueError):
        verify.reflect(SpaceTimeField(g, t + 0.5, f.values))


def test_duality_small():
    g = SpectralGrid(1, 64, 16.0)
    t = np.linspace(-3, 3, 1201)
    sym = fractional(1.5, RoughCoefficient((-0.5, 0.7), (1.0, 1.8, 0.9)))
    rep = verify.duality_check(sym, g, t, n_pairs=2, seed=1)
    assert rep.passed, rep.ratios


def test_layer_cake_matches_lp_norm():
    g = SpectralGrid(1, 64, 10.0)
    f = Corpus(3, 1).realize(g, np.linspace(0, 4, 81))[0]
    for p in (2.5, 4.0):
        assert verify.layer_cake(f, p) == pytest.approx(lp_norm(f, p) ** p, rel=1e-3)
    assert verify.layer_cake(f * 0.0, 3.0) == 0.0


def test_zero_member_ratio_is_zero():
    g = SpectralGrid(1, 64, 10.0)
    f = SpaceTimeField.zeros(g, np.linspace(0, 4, 41))
    assert verify.l2_ratios(heat(), [f]) == [0.0]


def test_estimate_report_roundtrip():
    rep = verify.EstimateReport("x", {}, {}, True, {"t": 1}, ratios=[1.0, 3.0, 2.0])
    d = rep.to_dict()
    assert d["verdict"] == "pass"
    assert d["ratio_summary"] == {"max": 3.0, "median": 2.0, "min": 1.0, "count": 3}
