"""Solution operator u = int p * f ds and G f = (-Delta)^{gamma/2} u.

Each Fourier mode obeys u' = psi(t) u + f.  Between samples the forcing is
replaced by its causal Lagrange interpolant (nodes t_{j+1-o} .. t_{j+1}) and
the exponential-times-polynomial integrals are done in closed form with
phi-functions, so the stiff factor exp((t-s) psi) is integrated exactly and
u(t_j) depends only on f(t_k) with k <= j.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import FOURIER, PHYSICAL, SpaceTimeField, frac_multiplier
from .symbols import Symbol, SymbolSamples


@dataclass(frozen=True)
class QuadSpec:
    """Time quadrature: ``order`` is the degree of the forcing interpolant."""

    order: int = 3
    support_tol: float = 1e-12

    def __post_init__(self):
        if not 0 <= self.order <= 6:
            raise ValueError("interpolation order must be in 0..6")


def phi_functions(z: np.ndarray, kmax: int) -> list[np.ndarray]:
    """phi_0 .. phi_kmax with phi_0 = exp and phi_{k+1}(z) = (phi_k(z) - 1/k!) / z."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1.0
    out = [np.exp(z)]
    zs = np.where(small, 1.0, z)
    for k in range(1, kmax + 1):
        out.append((out[-1] - 1.0 / math.factorial(k - 1)) / zs)
    if np.any(small):
        zz = z[small]
        for k in range(1, kmax + 1):
            term = np.full(zz.shape, 1.0 / math.factorial(k), dtype=complex)
            acc = term.copy()
            for i in range(1, 30):
                term = term * zz / (i + k)
                acc = acc + term
            out[k][small] = acc
    return out


def _stencil(j: int, order: int) -> list[int]:
    lo = max(0, j + 1 - order)
    return list(range(lo, j + 2))


def _check_forcing(f: SpaceTimeField, quad: QuadSpec):
    if f.domain != PHYSICAL:
        raise ValueError("forcing must be a physical field")
    if not np.all(np.isfinite(f.values)):
        raise ValueError("forcing has non-finite values")
    peak = float(np.max(np.abs(f.values))) if f.values.size else 0.0
    edge = max(float(np.max(np.abs(f.values[0]))), float(np.max(np.abs(f.values[-1]))))
    if peak > 0 and edge > quad.support_tol * peak:
        raise ValueError(
            "forcing is not compactly supported in time within its grid: "
            f"first/last slices reach {edge / peak:.2e} of the peak"
        )


class _Propagator:
    """Per-mode exponential integrator on the field's time grid."""

    def __init__(self, sym: Symbol, f: SpaceTimeField, quad: QuadSpec):
        self.samples = SymbolSamples(sym, f.grid.xi.reshape(-1, sym.dim))
        self.times = f.times
        self.order = quad.order
        self._cache: dict = {}

    def _weights(self, j: int, a: float, b: float, piece: int, nodes: list[int]):
        t0 = self.times[j]
        key = (
            round(a - t0, 13), round(b - t0, 13), piece,
            tuple(round(self.times[k] - t0, 13) for k in nodes),
        )
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        h = b - a
        lam = self.samples.values[piece]
        z = lam * h
        n = len(nodes)
        phis = phi_functions(z, n)
        # Lagrange basis in the local variable (s - a) / h
        zn = np.array([(self.times[k] - a) / h for k in nodes])
        vander = np.vander(zn, n, increasing=True)
        coef = np.linalg.inv(vander.T)
        moments = [h * math.factorial(p) * phis[p + 1] for p in range(n)]
        weights = [sum(coef[m, p] * moments[p] for p in range(n)) for m in range(n)]
        result = (phis[0], weights)
        if len(self._cache) < 4096:
            self._cache[key] = result
        return result

    def run(self, fhat: np.ndarray) -> np.ndarray:
        """fhat: (M+1, n_modes) -> uhat: (M+1, n_modes)."""
        out = np.zeros_like(fhat, dtype=complex)
        u = np.zeros(fhat.shape[1], dtype=complex)
        for j in range(len(self.times) - 1):
            nodes = _stencil(j, self.order)
            for a, b, piece in self.samples.segments(self.times[j], self.times[j + 1]):
                prop, weights = self._weights(j, a, b, piece, nodes)
                u = prop * u
                for m, k in enumerate(nodes):
                    u = u + weights[m] * fhat[k]
            out[j + 1] = u
        return out


def _solve_hat(sym: Symbol, f: SpaceTimeField, quad: QuadSpec) -> np.ndarray:
    if f.grid.dim != sym.dim:
        raise ValueError("symbol and field dimensions differ")
    _check_forcing(f, quad)
    fhat = f.grid.forward(f.values).reshape(f.n_times, -1)
    return _Propagator(sym, f, quad).run(fhat)


def _to_physical(f: SpaceTimeField, uhat: np.ndarray) -> SpaceTimeField:
    spec = uhat.reshape(f.n_times, *f.grid.shape)
    return SpaceTimeField(f.grid, f.times, f.grid.inverse(spec), PHYSICAL)


def apply_solution(sym: Symbol, f: SpaceTimeField, t_quad: QuadSpec | None = None) -> SpaceTimeField:
    """u(t) = int_{-inf}^t p(t, s, .) * f(s, .) ds on the input time grid."""
    quad = t_quad or QuadSpec()
    return _to_physical(f, _solve_hat(sym, f, quad))


def apply_G(sym: Symbol, f: SpaceTimeField, t_quad: QuadSpec | None = None) -> SpaceTimeField:
    """G f(t) = int_{-inf}^t K(t, s, .) * f(s, .) ds = (-Delta)^{gamma/2} u."""
    quad = t_quad or QuadSpec()
    uhat = _solve_hat(sym, f, quad)
    uhat *= frac_multiplier(f.grid, sym.gamma).reshape(1, -1)
    return _to_physical(f, uhat)


def apply_dual(sym: Symbol, g: SpaceTimeField, t_quad: QuadSpec | None = None) -> SpaceTimeField:
    """P g with P(t, s, x) = K(-s, -t, x), i.e. G for r -> psi(-r, xi)."""
    return apply_G(sym.reflected(), g, t_quad)


def solution_spectrum(sym: Symbol, f: SpaceTimeField, t_quad: QuadSpec | None = None) -> SpaceTimeField:
    """u-hat on the lattice (fourier-tagged)."""
    quad = t_quad or QuadSpec()
    uhat = _solve_hat(sym, f, quad).reshape(f.n_times, *f.grid.shape)
    return SpaceTimeField(f.grid, f.times, uhat, FOURIER)


def apply_symbol(sym: Symbol, u: SpaceTimeField) -> SpaceTimeField:
    """A(t)u slice by slice (physical in, physical out)."""
    samples = SymbolSamples(sym, u.grid.xi.reshape(-1, sym.dim))
    spec = u.grid.forward(u.values).reshape(u.n_times, -1)
    out = np.stack([samples.value(t) * spec[i] for i, t in enumerate(u.times)])
    return u.with_values(u.grid.inverse(out.reshape(u.n_times, *u.grid.shape)))


def time_derivative(u: SpaceTimeField) -> SpaceTimeField:
    """Fourth-order finite differences in t (uniform grids); second order at the ends."""
    t = u.times
    dt = np.diff(t)
    v = u.values
    out = np.gradient(v, t, axis=0, edge_order=2)
    if t.size >= 5 and np.allclose(dt, dt[0], rtol=1e-9, atol=0):
        h = dt[0]
        out[2:-2] = (v[:-4] - 8 * v[1:-3] + 8 * v[3:-1] - v[4:]) / (12 * h)
    return u.with_values(out)


def marcinkiewicz_split(f: SpaceTimeField, lam: float) -> tuple[SpaceTimeField, SpaceTimeField]:
    """(f 1_{|f| > lam}, f 1_{|f| <= lam})."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    big = np.abs(f.values) > lam
    zero = np.zeros((), dtype=f.values.dtype)
    return (
        f.with_values(np.where(big, f.values, zero)),
        f.with_values(np.where(big, zero, f.values)),
    )


def real_part(f: SpaceTimeField) -> SpaceTimeField:
    return f.with_values(np.real(f.values))
