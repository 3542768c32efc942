"""Periodic grids, space-time fields and Fourier transforms.

Physical arrays are stored with x_j = (j - N/2) dx along each axis, so the
origin sits at index N/2.  Spectra use numpy's FFT ordering.  The forward
transform approximates F(f)(xi) = int exp(-i x.xi) f(x) dx by dx^d * DFT.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

PHYSICAL = "physical"
FOURIER = "fourier"
FIELD_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class SpectralGrid:
    dim: int
    n: int
    length: float

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError("dim must be 1, 2 or 3")
        if self.n < 8 or self.n & (self.n - 1):
            raise ValueError("points per axis must be a power of two >= 8")
        if not self.length > 0:
            raise ValueError("box length must be positive")

    @property
    def spacing(self) -> float:
        return self.length / self.n

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def axes(self) -> tuple[int, ...]:
        return tuple(range(-self.dim, 0))

    @property
    def nyquist(self) -> float:
        return math.pi * self.n / self.length

    @cached_property
    def x_axis(self) -> np.ndarray:
        return (np.arange(self.n) - self.n // 2) * self.spacing

    @cached_property
    def xi_axis(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)

    @cached_property
    def x(self) -> np.ndarray:
        """Physical coordinates, shape (N, ..., N, d)."""
        return np.stack(np.meshgrid(*([self.x_axis] * self.dim), indexing="ij"), axis=-1)

    @cached_property
    def xi(self) -> np.ndarray:
        """Frequency lattice in FFT order, shape (N, ..., N, d)."""
        return np.stack(np.meshgrid(*([self.xi_axis] * self.dim), indexing="ij"), axis=-1)

    @cached_property
    def x_norm(self) -> np.ndarray:
        return np.linalg.norm(self.x, axis=-1)

    @cached_property
    def xi_norm(self) -> np.ndarray:
        return np.linalg.norm(self.xi, axis=-1)

    def rescaled(self, factor: float) -> "SpectralGrid":
        """Same lattice with every length multiplied by ``factor``."""
        return SpectralGrid(self.dim, self.n, self.length * factor)

    def refined(self) -> "SpectralGrid":
        return SpectralGrid(self.dim, 2 * self.n, self.length)

    def describe(self) -> dict:
        return {"dim": self.dim, "n": self.n, "length": self.length}

    # single-slice transforms
    def forward(self, values: np.ndarray) -> np.ndarray:
        shifted = np.fft.ifftshift(values, axes=self.axes)
        return self.cell_volume * np.fft.fftn(shifted, axes=self.axes)

    def inverse(self, spectrum: np.ndarray) -> np.ndarray:
        out = np.fft.ifftn(spectrum, axes=self.axes) / self.cell_volume
        return np.fft.fftshift(out, axes=self.axes)


@dataclass(frozen=True, eq=False)
class SpaceTimeField:
    """Samples on ``times`` x grid; ``values`` has shape (len(times), N, ..., N)."""

    grid: SpectralGrid
    times: np.ndarray
    values: np.ndarray
    domain: str = PHYSICAL

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values)
        if times.ndim != 1 or times.size < 1:
            raise ValueError("times must be a non-empty 1-d array")
        if np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        if values.shape != (times.size, *self.grid.shape):
            raise ValueError(
                f"values shape {values.shape} does not match {(times.size, *self.grid.shape)}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        if self.domain not in (PHYSICAL, FOURIER):
            raise ValueError(f"unknown domain tag {self.domain!r}")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def n_times(self) -> int:
        return self.times.size

    def with_values(self, values: np.ndarray, domain: str | None = None) -> "SpaceTimeField":
        return SpaceTimeField(self.grid, self.times, values, domain or self.domain)

    def __add__(self, other: "SpaceTimeField") -> "SpaceTimeField":
        _check_compatible(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "SpaceTimeField") -> "SpaceTimeField":
        _check_compatible(self, other)
        return self.with_values(self.values - other.values)

    def __mul__(self, scalar) -> "SpaceTimeField":
        return self.with_values(self.values * scalar)

    __rmul__ = __mul__

    @cached_property
    def time_weights(self) -> np.ndarray:
        """Trapezoid weights of the time samples."""
        t = self.times
        if t.size == 1:
            return np.ones(1)
        w = np.zeros_like(t)
        dt = np.diff(t)
        w[:-1] += 0.5 * dt
        w[1:] += 0.5 * dt
        return w

    @classmethod
    def zeros(cls, grid: SpectralGrid, times, dtype=float) -> "SpaceTimeField":
        times = np.asarray(times, dtype=float)
        return cls(grid, times, np.zeros((times.size, *grid.shape), dtype=dtype))

    @classmethod
    def from_function(cls, grid: SpectralGrid, times, fn) -> "SpaceTimeField":
        """Sample ``fn(t, x)`` where x has shape (N, ..., N, d)."""
        times = np.asarray(times, dtype=float)
        vals = np.stack([np.asarray(fn(t, grid.x)) * np.ones(grid.shape) for t in times])
        return cls(grid, times, vals)


def _check_compatible(a: SpaceTimeField, b: SpaceTimeField):
    if a.grid != b.grid or a.domain != b.domain or not np.array_equal(a.times, b.times):
        raise ValueError("fields live on different grids, times or domains")


def fft_field(f: SpaceTimeField) -> SpaceTimeField:
    """Per-slice forward transform, dx^d * DFT with the origin at index N/2."""
    if f.domain != PHYSICAL:
        raise ValueError("fft_field expects a physical field")
    return f.with_values(f.grid.forward(f.values), FOURIER)


def ifft_field(f: SpaceTimeField) -> SpaceTimeField:
    if f.domain != FOURIER:
        raise ValueError("ifft_field expects a fourier field")
    return f.with_values(f.grid.inverse(f.values), PHYSICAL)


def frac_multiplier(grid: SpectralGrid, gamma: float) -> np.ndarray:
    """|xi|^gamma on the lattice, 0 at xi = 0."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    r = grid.xi_norm
    out = np.zeros_like(r)
    nz = r > 0
    out[nz] = r[nz] ** gamma
    return out


def frac_laplacian(f: SpaceTimeField, gamma: float) -> SpaceTimeField:
    """(-Delta)^{gamma/2}, returned in the domain of the input."""
    mult = frac_multiplier(f.grid, gamma)
    if f.domain == FOURIER:
        return f.with_values(f.values * mult)
    spec = f.grid.forward(f.values) * mult
    out = f.grid.inverse(spec)
    if np.isrealobj(f.values):
        out = out.real
    return f.with_values(out)


def l2_physical(f: SpaceTimeField) -> np.ndarray:
    """Per-slice L2 norm in x."""
    axes = tuple(range(1, f.values.ndim))
    return np.sqrt(f.grid.cell_volume * np.sum(np.abs(f.values) ** 2, axis=axes))


def l2_fourier(f: SpaceTimeField) -> np.ndarray:
    """Per-slice L2 norm of the spectrum with the d xi = (2pi/L)^d measure."""
    axes = tuple(range(1, f.values.ndim))
    dxi = (2 * np.pi / f.grid.length) ** f.grid.dim
    return np.sqrt(dxi * np.sum(np.abs(f.values) ** 2, axis=axes))


# ---------------------------------------------------------------------------
# serialization


def write_field(f: SpaceTimeField, path) -> tuple[Path, Path]:
    """Little-endian interleaved re/im float64 blob plus a JSON sidecar."""
    path = Path(path)
    bin_path = path.with_suffix(".bin")
    json_path = path.with_suffix(".json")
    data = np.ascontiguousarray(f.values, dtype="<c16")
    bin_path.write_bytes(data.tobytes())
    meta = {
        "schema_version": FIELD_SCHEMA_VERSION,
        "dim": f.grid.dim,
        "n": f.grid.n,
        "length": f.grid.length,
        "times": f.times.tolist(),
        "domain": f.domain,
        "layout": "time-major, C order, origin at index N/2 (physical)",
        "dtype": "complex128 little-endian, interleaved re/im",
    }
    json_path.write_text(json.dumps(meta, indent=2))
    return bin_path, json_path


def read_field(path) -> SpaceTimeField:
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    if meta.get("schema_version") != FIELD_SCHEMA_VERSION:
        raise ValueError(f"unsupported field schema {meta.get('schema_version')}")
    grid = SpectralGrid(meta["dim"], meta["n"], meta["length"])
    times = np.asarray(meta["times"], dtype=float)
    raw = np.frombuffer(path.with_suffix(".bin").read_bytes(), dtype="<c16")
    values = raw.reshape(times.size, *grid.shape).astype(complex)
    return SpaceTimeField(grid, times, values, meta["domain"])


def export_csv(f: SpaceTimeField, path, time_index: int) -> Path:
    """One d = 1 slice as rows (x or xi, re, im)."""
    if f.grid.dim != 1:
        raise ValueError("CSV export is for d = 1 fields")
    path = Path(path)
    coord = f.grid.x_axis if f.domain == PHYSICAL else f.grid.xi_axis
    row = np.asarray(f.values[time_index], dtype=complex)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x" if f.domain == PHYSICAL else "xi", "re", "im", "t"])
        t = f.times[time_index]
        for c, v in zip(coord, row):
            w.writerow([repr(float(c)), repr(float(v.real)), repr(float(v.imag)), repr(float(t))])
    return path
