import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from parabmo.corpus import bump
from parabmo.operators import (
    QuadSpec,
    apply_G,
    apply_dual,
    apply_solution,
    apply_symbol,
    marcinkiewicz_split,
    phi_functions,
    solution_spectrum,
    time_derivative,
)
from parabmo.spectral import SpaceTimeField, SpectralGrid, frac_laplacian
from parabmo.symbols import RoughCoefficient, fractional, heat

GRID = SpectralGrid(1, 64, 10.0)
TIMES = np.linspace(0.0, 3.0, 601)


def _eta(t):
    return bump(np.asarray(t, dtype=float), 1.2, 0.8)


def _mode_forcing(grid=GRID, times=TIMES, k=1):
    kx = 2 * np.pi * k / grid.length
    return SpaceTimeField.from_function(grid, times, lambda t, x: _eta(t) * np.sin(kx * x[..., 0])), kx


def _gaussian_forcing(grid=GRID, times=TIMES, center=1.2, x0=0.0):
    return SpaceTimeField.from_function(
        grid, times, lambda t, x: bump(np.asarray(t), center, 0.7) * np.exp(-(x[..., 0] - x0) ** 2))


def test_phi_functions_series_and_direct_agree():
    # |z| straddles the switch between the series and the recurrence
    z = np.array([-0.999, -1.001, 0.5 + 0.5j, -3.0, 2.0j])
    phi = phi_functions(z, 4)
    for k in range(1, 5):
        for i, zz in enumerate(z):
            # phi_k(z) = int_0^1 e^{(1-s) z} s^{k-1} / (k-1)! ds
            def part(s, fn):
                return fn(np.exp((1 - s) * zz) * s ** (k - 1)) / math.factorial(k - 1)

            re = integrate.quad(part, 0, 1, args=(np.real,), epsabs=0, epsrel=1e-13)[0]
            im = integrate.quad(part, 0, 1, args=(np.imag,), epsabs=1e-15, epsrel=1e-13)[0]
            assert abs(phi[k][i] - (re + 1j * im)) < 1e-12


def test_zero_forcing():
    f = SpaceTimeField.zeros(GRID, TIMES)
    assert np.all(apply_G(heat(), f).values == 0)


def test_scalar_mode_oracle():
    f, kx = _mode_forcing()
    G = apply_G(heat(), f).values.real
    ix = 20
    sx = np.sin(kx * GRID.x_axis[ix])
    for j in (150, 300, 450, 600):
        t = TIMES[j]
        ref, _ = integrate.quad(lambda s: kx**2 * np.exp(-kx**2 * (t - s)) * _eta(s),
                                0.4, min(t, 2.0), epsabs=1e-14, epsrel=1e-13, limit=200)
        assert abs(G[j, ix] - ref * sx) < 1e-8


def test_sol_equal():
    f = _gaussian_forcing()
    sym = fractional(1.5, RoughCoefficient((0.9, 1.6), (1.0, 2.0, 0.7)))
    u = apply_solution(sym, f)
    G = apply_G(sym, f)
    assert np.max(np.abs(frac_laplacian(u, 1.5).values - G.values)) < 1e-8


def test_pde_residual():
    grid = SpectralGrid(1, 128, 20.0)
    times = np.linspace(0.0, 3.0, 1201)
    f = _gaussian_forcing(grid, times)
    sym = fractional(1.5, 1.0)
    u = apply_solution(sym, f)
    res = time_derivative(u) - apply_symbol(sym, u) - f
    inner = slice(5, -5)
    rel = np.linalg.norm(res.values[inner]) / np.linalg.norm(f.values[inner])
    assert rel < 1e-4


def test_linearity():
    f = _gaussian_forcing()
    g = _gaussian_forcing(center=1.8, x0=1.5)
    sym = fractional(0.8, 1.0)
    lhs = apply_solution(sym, f + g).values
    rhs = apply_solution(sym, f).values + apply_solution(sym, g).values
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * np.max(np.abs(lhs))


def test_causality():
    f = _gaussian_forcing()
    g = f.with_values(np.where(TIMES[:, None] > 2.0, 5.0 * f.values[::-1], f.values))
    sym = fractional(1.5, 1.0)
    a, b = apply_G(sym, f).values, apply_G(sym, g).values
    early = TIMES <= 2.0
    assert np.array_equal(a[early], b[early])


def test_decay_after_support():
    f = SpaceTimeField.from_function(GRID, TIMES, lambda t, x: bump(np.asarray(t), 0.6, 0.5)
                                     * np.exp(-x[..., 0] ** 2))
    nu = 0.9
    sym = fractional(1.2, nu)
    uhat = solution_spectrum(sym, f).values
    j0 = np.searchsorted(TIMES, 1.1)
    rg = GRID.xi_norm**1.2
    for j in (j0 + 50, j0 + 200, len(TIMES) - 1):
        bound = np.abs(uhat[j0]) * np.exp(-nu * (TIMES[j] - TIMES[j0]) * rg)
        assert np.all(np.abs(uhat[j]) <= bound * (1 + 1e-10) + 1e-300)


@given(st.floats(-3, 3))
def test_translation_equivariance(shift_cells):
    n = int(round(shift_cells))
    f = _gaussian_forcing()
    sym = fractional(1.5, 1.0)
    shifted = f.with_values(np.roll(f.values, n, axis=1))
    a = np.roll(apply_G(sym, f).values, n, axis=1)
    b = apply_G(sym, shifted).values
    assert np.max(np.abs(a - b)) < 1e-12


def test_dual_is_reflected_G():
    f = _gaussian_forcing()
    coef = RoughCoefficient((0.5,), (1.0, 2.0))
    a = apply_dual(fractional(1.5, coef), f).values
    b = apply_G(fractional(1.5, coef.reflected()), f).values
    assert np.array_equal(a, b)


def test_rejects_noncompact_forcing():
    f = SpaceTimeField.from_function(GRID, TIMES, lambda t, x: np.exp(-x[..., 0] ** 2))
    with pytest.raises(ValueError):
        apply_G(heat(), f)
    with pytest.raises(ValueError):
        QuadSpec(order=9)


def test_higher_order_quadrature_converges():
    f, kx = _mode_forcing(times=np.linspace(0.0, 3.0, 151))
    t = 2.1
    ref, _ = integrate.quad(lambda s: kx**2 * np.exp(-kx**2 * (t - s)) * _eta(s), 0.4, 2.0,
                            epsabs=1e-14, epsrel=1e-13)
    j = np.searchsorted(f.times, t)
    ix = 20
    sx = np.sin(kx * GRID.x_axis[ix])
    errs = [abs(apply_G(heat(), f, QuadSpec(order=o)).values.real[j, ix] - ref * sx)
            for o in (1, 3)]
    assert errs[1] < errs[0]


def test_marcinkiewicz_split():
    rng = np.random.default_rng(7)
    f = SpaceTimeField(GRID, TIMES[:5], rng.normal(size=(5, 64)))
    a = np.abs(f.values)
    lam = float(np.median(a))
    f1, f2 = marcinkiewicz_split(f, lam)
    assert np.array_equal(f1.values + f2.values, f.values)
    assert np.all((f1.values == 0) | (a > lam))
    assert np.all((f2.values == 0) | (a <= lam))
    big, small = marcinkiewicz_split(f, float(a.max()))
    assert not np.any(big.values) and np.array_equal(small.values, f.values)
    big, small = marcinkiewicz_split(f, 1e-300)
    assert np.array_equal(big.values, f.values) and not np.any(small.values)
    with pytest.raises(ValueError):
        marcinkiewicz_split(f, 0.0)
