"""Seeded corpora of smooth forcings compactly supported in time.

Members are described by parameters in physical units and sampled onto a
grid on demand, so the same member can be realized at two resolutions.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .seminorms import lp_norm
from .spectral import SpaceTimeField, SpectralGrid

GENERATORS = ("gaussian-bumps", "random-fourier-lowpass", "tensor-wavelets")


def bump(t: np.ndarray, center: float, half_width: float) -> np.ndarray:
    """exp(1 - 1/(1 - r^2)) on |r| < 1, r = (t - center) / half_width; C-infinity, peak 1."""
    r = (np.asarray(t, dtype=float) - center) / half_width
    out = np.zeros_like(r)
    inside = np.abs(r) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
    return out


@dataclass(frozen=True)
class Member:
    generator: str
    params: dict = field(hash=False)

    def __call__(self, t: float, x: np.ndarray) -> np.ndarray:
        p = self.params
        out = np.zeros(x.shape[:-1])
        for term in p["terms"]:
            env = float(bump(np.array([t]), term["t0"], term["tw"])[0])
            if env == 0.0:
                continue
            out = out + term["amp"] * env * _spatial(self.generator, term, x)
        return out

    def sample(self, grid: SpectralGrid, times) -> SpaceTimeField:
        return SpaceTimeField.from_function(grid, times, self)


def _spatial(gen: str, term: dict, x: np.ndarray) -> np.ndarray:
    y = x - np.asarray(term["x0"])
    if gen == "gaussian-bumps":
        return np.exp(-np.sum(y**2, axis=-1) / (2 * term["width"] ** 2))
    if gen == "random-fourier-lowpass":
        k = np.asarray(term["k"])
        window = np.exp(-np.sum(y**2, axis=-1) / (2 * term["width"] ** 2))
        return window * np.cos(y @ k + term["phase"])
    if gen == "tensor-wavelets":
        z = y / term["width"]
        return np.prod((1 - z**2) * np.exp(-(z**2) / 2), axis=-1)
    raise ValueError(f"unknown generator {gen!r}")


@dataclass(frozen=True)
class Corpus:
    """``count`` members from ``generator``; centres within ``space_extent`` of 0."""

    seed: int
    count: int = 50
    generator: str = "gaussian-bumps"
    normalization: str | float = "linf"
    dim: int = 1
    time_window: tuple[float, float] = (0.0, 4.0)
    space_extent: float = 2.0
    width_range: tuple[float, float] = (0.3, 1.0)
    max_terms: int = 3

    def __post_init__(self):
        if self.generator not in GENERATORS:
            raise ValueError(f"generator must be one of {GENERATORS}")
        if self.count < 0:
            raise ValueError("count must be nonnegative")
        norm = self.normalization
        if not (norm == "linf" or (isinstance(norm, (int, float)) and norm >= 1)):
            raise ValueError("normalization is 'linf' or a p >= 1")

    def members(self) -> list[Member]:
        rng = np.random.default_rng(self.seed)
        t_lo, t_hi = self.time_window
        span = t_hi - t_lo
        out = []
        for _ in range(self.count):
            terms = []
            for _ in range(int(rng.integers(1, self.max_terms + 1))):
                tw = rng.uniform(0.1, 0.3) * span
                t0 = rng.uniform(t_lo + 1.05 * tw, t_hi - 1.05 * tw)
                term = {
                    "t0": float(t0),
                    "tw": float(tw),
                    "amp": float(rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 1.0)),
                    "x0": rng.uniform(-self.space_extent, self.space_extent, self.dim).tolist(),
                    "width": float(rng.uniform(*self.width_range)),
                }
                if self.generator == "random-fourier-lowpass":
                    kmax = 2.0 / term["width"]
                    term["k"] = rng.uniform(-kmax, kmax, self.dim).tolist()
                    term["phase"] = float(rng.uniform(0, 2 * np.pi))
                terms.append(term)
            out.append(Member(self.generator, {"terms": terms}))
        return out

    def realize(self, grid: SpectralGrid, times) -> list[SpaceTimeField]:
        """Sampled, normalized members."""
        if grid.dim != self.dim:
            raise ValueError("corpus and grid dimensions differ")
        return [normalize(m.sample(grid, times), self.normalization) for m in self.members()]

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "count": self.count,
            "generator": self.generator,
            "normalization": self.normalization,
            "dim": self.dim,
            "time_window": list(self.time_window),
            "space_extent": self.space_extent,
            "width_range": list(self.width_range),
            "max_terms": self.max_terms,
        }


def normalize(f: SpaceTimeField, normalization: str | float) -> SpaceTimeField:
    if normalization == "linf":
        scale = float(np.max(np.abs(f.values)))
    else:
        scale = lp_norm(f, float(normalization))
    return f if scale == 0 else f * (1.0 / scale)
