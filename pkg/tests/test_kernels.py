import warnings

import numpy as np
import pytest
from scipy import integrate

from parabmo import kernels
from parabmo.kernels import AliasingRisk, TruncationWarning
from parabmo.spectral import SpectralGrid
from parabmo.symbols import RoughCoefficient, catalog, eval_symbol, fractional, heat

GRID = SpectralGrid(1, 1024, 40.0)


def test_heat_p_and_K():
    sym = heat()
    x = GRID.x_axis
    p = kernels.kernel_p(sym, 0.0, 1.0, GRID)
    assert np.max(np.abs(p.values - np.exp(-x**2 / 4) / np.sqrt(4 * np.pi))) < 1e-8
    K = kernels.kernel_K(sym, 0.0, 1.0, GRID)
    assert np.max(np.abs(K.values - kernels.heat_K(x, 1.0))) < 1e-6
    assert K.spectrum[0] == 0


def test_cauchy_kernel():
    sym = fractional(1.0, 1.0)
    g = SpectralGrid(1, 4096, 40.0)
    p = kernels.kernel_p(sym, 0.0, 1.0, g).values.real
    inner = np.abs(g.x_axis) <= g.length / 4
    assert np.max(np.abs(p - kernels.periodic_poisson_kernel(g.x_axis, 1.0, g.length))) < 1e-6
    # the periodic images are what separates it from the free-space kernel
    free = 1 / (np.pi * (1 + g.x_axis**2))
    assert np.max(np.abs(p - free)[inner]) < 1e-3


@pytest.mark.parametrize("dim", [1, 2])
def test_mass_is_one(dim):
    grid = GRID if dim == 1 else SpectralGrid(2, 64, 20.0)
    for name, sym in catalog(dim).items():
        p = kernels.kernel_p(sym, -0.5, 9.5, grid)
        assert abs(p.mass() - 1.0) < 1e-12, name
        assert abs(p.spectrum.flat[0] - 1.0) < 1e-12


def test_chapman_kolmogorov():
    sym = fractional(1.5, 1.0)
    a = kernels.kernel_p(sym, 0.0, 0.7, GRID)
    b = kernels.kernel_p(sym, 0.0, 1.1, GRID)
    ab = kernels.kernel_p(sym, 0.0, 1.8, GRID)
    conv = GRID.inverse(GRID.forward(a.values) * GRID.forward(b.values))
    assert np.max(np.abs(conv - ab.values)) < 1e-10


def test_spectrum_majorant():
    coef = RoughCoefficient((-0.2, 0.4), (1.0, 0.8 + 0.3j, 2.0))
    sym = fractional(1.5, coef, nu=0.8)
    for s, t in [(-1.0, 0.1), (0.0, 0.5), (0.3, 3.0)]:
        K = kernels.kernel_K(sym, s, t, GRID)
        rg = GRID.xi_norm**1.5
        H = rg * np.exp(-0.8 * (t - s) * rg)
        assert np.all(np.abs(K.spectrum) <= H * (1 + 1e-12))


def test_aliasing_guard():
    with pytest.raises(AliasingRisk):
        kernels.kernel_p(heat(), 0.0, 1e-4, GRID)
    with pytest.raises(ValueError):
        kernels.kernel_p(heat(), 1.0, 1.0, GRID)


def test_pdual_time_independent():
    sym = fractional(1.5, 1.0)
    P = kernels.kernel_Pdual(sym, 0.2, 1.4, GRID)
    K = kernels.kernel_K(sym, 0.2, 1.4, GRID)
    assert np.max(np.abs(P.values - K.values)) < 1e-12


def test_pdual_rough_coefficient():
    coef = RoughCoefficient((-0.3, 0.6), (1.0, 2.0, 1.5))
    sym = fractional(1.5, coef)
    P = kernels.kernel_Pdual(sym, 0.1, 1.2, GRID)
    K = kernels.kernel_K(fractional(1.5, coef.reflected()), 0.1, 1.2, GRID)
    assert np.max(np.abs(P.values - K.values)) < 1e-12
    # and it is the forward kernel on the mirrored interval (-t, -s)
    spec = kernels.frac_multiplier(GRID, 1.5) * np.exp(
        np.array([coef.integral(-1.2, -0.1)]) * -(GRID.xi_norm**1.5))
    assert np.max(np.abs(P.spectrum - spec)) < 1e-12


def test_q1_self_similarity():
    sym = fractional(0.8, 1.0)
    a = kernels.kernel_q1(sym, 0.0, 1.0, GRID)
    b = kernels.kernel_q1(sym, 5.0, 6.0, GRID)
    c = kernels.kernel_q1(sym, 2.0, 40.0, GRID)
    assert np.max(np.abs(a.values - b.values)) < 1e-12
    assert np.max(np.abs(a.values - c.values)) < 1e-12


def test_q2_sup_bounded_over_sweep():
    coef = RoughCoefficient((0.0,), (1.0, 2.0))
    sym = fractional(1.5, coef)
    sups = [kernels.kernel_q2(sym, -d / 2, d / 2, GRID).sup() for d in np.logspace(-3, 3, 13)]
    assert max(sups) < 10 * min(sups)
    assert max(sups) < 1.0


def test_weighted_moment_heat_oracle():
    sym = heat()
    w = 0.5 + 0.25
    snap = kernels.kernel_q1K(sym, 0.0, 1.0, GRID)
    got = kernels.weighted_L2_moment(snap, w)
    exact, _ = integrate.quad(lambda x: (abs(x) ** w * kernels.heat_K(x, 1.0)) ** 2,
                              -np.inf, np.inf, epsabs=1e-14, epsrel=1e-12)
    assert abs(got - exact) < 1e-4 * exact


@pytest.mark.filterwarnings("ignore::parabmo.kernels.TruncationWarning")
def test_weighted_moment_uniform_in_duration():
    # the same truncation at every duration is part of what is uniform
    sym = fractional(1.5, 1.0)
    vals = []
    for d in np.logspace(-2, 2, 5):
        vals.append(kernels.weighted_L2_moment(kernels.kernel_q1K(sym, 0.0, d, GRID), 0.75))
    assert np.allclose(vals, vals[0], rtol=1e-10)


def test_weighted_moment_warns_on_truncation():
    sym = fractional(0.8, 1.0)
    snap = kernels.kernel_q1K(sym, 0.0, 1.0, SpectralGrid(1, 256, 8.0))
    with pytest.warns(TruncationWarning):
        kernels.weighted_L2_moment(snap, 0.9)
    with pytest.raises(ValueError):
        kernels.weighted_L2_moment(snap, 0.4)


def test_moment_grows_with_delta():
    sym = fractional(0.4, 1.0)
    snap = kernels.kernel_q1K(sym, 0.0, 1.0, SpectralGrid(1, 8192, 8.0))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        vals = [kernels.weighted_L2_moment(snap, 0.5 + d) for d in (0.1, 0.2, 0.3, 0.38)]
    assert np.all(np.isfinite(vals))
    assert np.all(np.diff(vals) > 0)


def test_gradient_kernel_is_odd():
    sym = heat()
    g = kernels.kernel_gradq1K(sym, 0.0, 1.0, GRID).values.real
    assert np.max(np.abs(g[1:] + g[1:][::-1])) < 1e-12


def test_kernel_spectrum_uses_symbol():
    sym = fractional(1.5, RoughCoefficient((0.5,), (1.0, 3.0)))
    p = kernels.kernel_p(sym, 0.0, 1.0, GRID)
    xi = GRID.xi_axis[5]
    expect = np.exp(0.5 * eval_symbol(sym, 0.0, xi) + 0.5 * eval_symbol(sym, 1.0, xi))
    assert p.spectrum[5] == pytest.approx(expect, rel=1e-13)
