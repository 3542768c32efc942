"""Kernels p, K, the rescaled kernels q1, q2 and the dual kernel P.

All kernels are synthesized on the frequency side from exp(int_s^t psi) and
brought to physical space by one inverse transform.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .spectral import SpectralGrid, frac_multiplier
from .symbols import Symbol, SymbolSamples

DECAY_THRESHOLD = 25.0
KINDS = ("p", "K", "q1", "q1K", "gradq1K", "q2", "Pdual")


class AliasingRisk(ValueError):
    """The kernel spectrum has not decayed at the Nyquist frequency."""


class TruncationWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class KernelSnapshot:
    grid: SpectralGrid
    s: float
    t: float
    kind: str
    values: np.ndarray
    spectrum: np.ndarray

    @property
    def duration(self) -> float:
        return self.t - self.s

    def l1(self) -> float:
        return float(self.grid.cell_volume * np.sum(np.abs(self.values)))

    def mass(self) -> complex:
        return complex(self.grid.cell_volume * np.sum(self.values))

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))


def _check_times(s: float, t: float):
    if not t > s:
        raise ValueError(f"kernels need t > s, got s={s}, t={t}")


def check_decay(sym: Symbol, grid: SpectralGrid, effective_duration: float,
                threshold: float = DECAY_THRESHOLD):
    """Raise AliasingRisk unless nu * duration * |xi_max|^gamma >= threshold."""
    exponent = sym.nu * effective_duration * grid.nyquist**sym.gamma
    if exponent < threshold:
        raise AliasingRisk(
            f"spectrum decays only to exp(-{exponent:.3g}) at Nyquist "
            f"(need exp(-{threshold})); enlarge N, shrink L or lengthen t - s"
        )


def _snapshot(grid, s, t, kind, spectrum) -> KernelSnapshot:
    return KernelSnapshot(grid, s, t, kind, grid.inverse(spectrum), spectrum)


def _exp_integral(sym: Symbol, s: float, t: float, xi: np.ndarray) -> np.ndarray:
    return np.exp(SymbolSamples(sym, xi).integral(s, t))


def p_spectrum(sym: Symbol, s: float, t: float, grid: SpectralGrid) -> np.ndarray:
    return _exp_integral(sym, s, t, grid.xi)


def kernel_p(sym: Symbol, s: float, t: float, grid: SpectralGrid,
             decay_threshold: float = DECAY_THRESHOLD) -> KernelSnapshot:
    """p(t, s, .) = F^{-1} exp(int_s^t psi(r, xi) dr)."""
    _check_times(s, t)
    check_decay(sym, grid, t - s, decay_threshold)
    return _snapshot(grid, s, t, "p", p_spectrum(sym, s, t, grid))


def kernel_K(sym: Symbol, s: float, t: float, grid: SpectralGrid,
             decay_threshold: float = DECAY_THRESHOLD) -> KernelSnapshot:
    """K(t, s, .) = (-Delta)^{gamma/2} p(t, s, .)."""
    _check_times(s, t)
    check_decay(sym, grid, t - s, decay_threshold)
    spec = frac_multiplier(grid, sym.gamma) * p_spectrum(sym, s, t, grid)
    return _snapshot(grid, s, t, "K", spec)


def _q1_spectrum(sym: Symbol, s: float, t: float, grid: SpectralGrid) -> tuple[np.ndarray, np.ndarray]:
    scale = (t - s) ** (-1.0 / sym.gamma)
    samples = SymbolSamples(sym, scale * grid.xi)
    return np.exp(samples.integral(s, t)), samples


def kernel_q1(sym: Symbol, s: float, t: float, grid: SpectralGrid,
              decay_threshold: float = DECAY_THRESHOLD) -> KernelSnapshot:
    """q1 = F^{-1} exp(int_s^t psi(r, (t-s)^{-1/gamma} xi) dr)."""
    _check_times(s, t)
    check_decay(sym, grid, 1.0, decay_threshold)
    spec, _ = _q1_spectrum(sym, s, t, grid)
    return _snapshot(grid, s, t, "q1", spec)


def kernel_q1K(sym: Symbol, s: float, t: float, grid: SpectralGrid,
               decay_threshold: float = DECAY_THRESHOLD) -> KernelSnapshot:
    """(-Delta)^{gamma/2} q1."""
    _check_times(s, t)
    check_decay(sym, grid, 1.0, decay_threshold)
    spec, _ = _q1_spectrum(sym, s, t, grid)
    return _snapshot(grid, s, t, "q1K", frac_multiplier(grid, sym.gamma) * spec)


def kernel_gradq1K(sym: Symbol, s: float, t: float, grid: SpectralGrid, axis: int = 0,
                   decay_threshold: float = DECAY_THRESHOLD) -> KernelSnapshot:
    """d/dx^axis (-Delta)^{gamma/2} q1."""
    _check_times(s, t)
    check_decay(sym, grid, 1.0, decay_threshold)
    spec, _ = _q1_spectrum(sym, s, t, grid)
    spec = 1j * grid.xi[..., axis] * frac_multiplier(grid, sym.gamma) * spec
    return _snapshot(grid, s, t, "gradq1K", spec)


def kernel_q2(sym: Symbol, s: float, t: float, grid: SpectralGrid,
              decay_threshold: float = DECAY_THRESHOLD) -> KernelSnapshot:
    """(t-s) F^{-1}[psi(t, (t-s)^{-1/gamma} xi) |xi|^gamma exp(int_s^t psi(r, ...) dr)]."""
    _check_times(s, t)
    check_decay(sym, grid, 1.0, decay_threshold)
    spec, samples = _q1_spectrum(sym, s, t, grid)
    spec = (t - s) * samples.value(t) * frac_multiplier(grid, sym.gamma) * spec
    return _snapshot(grid, s, t, "q2", spec)


def kernel_Pdual(sym: Symbol, s: float, t: float, grid: SpectralGrid,
                 decay_threshold: float = DECAY_THRESHOLD) -> KernelSnapshot:
    """P(t, s, .) = K(-s, -t, .): K built from r -> psi(-r, xi)."""
    snap = kernel_K(sym.reflected(), s, t, grid, decay_threshold)
    return KernelSnapshot(grid, s, t, "Pdual", snap.values, snap.spectrum)


def weighted_L2_moment(k: KernelSnapshot, weight_exponent: float,
                       truncation_tol: float = 1e-8) -> float:
    """dx^d * sum | |x|^w values |^2 over the periodic cell centred at 0."""
    grid = k.grid
    d = grid.dim
    delta = weight_exponent - d / 2
    if not delta > 0:
        raise ValueError("weight exponent must exceed d/2")
    integrand = (grid.x_norm**weight_exponent * np.abs(k.values)) ** 2
    peak = integrand.max()
    edge = integrand[np.abs(grid.x_norm - grid.length / 2) <= grid.spacing]
    if peak > 0 and edge.size and edge.max() > truncation_tol * peak:
        warnings.warn(
            f"weighted integrand at |x| = L/2 is {edge.max() / peak:.2e} of its peak; "
            "moment may be truncated",
            TruncationWarning,
            stacklevel=2,
        )
    return float(grid.cell_volume * integrand.sum())


def heat_kernel(x: np.ndarray, duration: float, nu: float = 1.0, dim: int = 1) -> np.ndarray:
    """Closed-form p for psi = -nu|xi|^2."""
    var = 2.0 * nu * duration
    r2 = np.sum(np.atleast_1d(x) ** 2, axis=-1) if np.ndim(x) > 1 else np.asarray(x) ** 2
    return np.exp(-r2 / (2 * var)) / (2 * math.pi * var) ** (dim / 2)


def heat_K(x: np.ndarray, duration: float, nu: float = 1.0) -> np.ndarray:
    """Closed-form -p'' (d = 1) for psi = -nu|xi|^2."""
    a = nu * duration
    x = np.asarray(x, dtype=float)
    return (1.0 / (2 * a) - x**2 / (4 * a**2)) * heat_kernel(x, duration, nu)


def periodic_poisson_kernel(x: np.ndarray, duration: float, length: float) -> np.ndarray:
    """Periodization of (1/pi) * duration / (duration^2 + x^2) over period ``length``."""
    a = 2 * math.pi * duration / length
    return np.sinh(a) / (length * (np.cosh(a) - np.cos(2 * math.pi * np.asarray(x) / length)))
