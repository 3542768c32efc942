"""Parabolic cylinders, mean oscillation, BMO, sharp/maximal functions, L_p norms.

Discrete measure: a grid cell belongs to a cylinder iff its centre (the
sample point) does; time samples carry trapezoid weights, space cells dx^d.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .spectral import PHYSICAL, SpaceTimeField

MIN_CELLS = 8


class EmptySweep(ValueError):
    """No cylinder of the sweep fits inside the data window."""


class CoverageWarning(UserWarning):
    pass


class ImaginaryPartWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ParabolicCylinder:
    """Q_c(t0, x0) = (t0 - c^gamma, t0 + c^gamma) x B_c(x0)."""

    t0: float
    x0: tuple[float, ...]
    c: float
    gamma: float

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("cylinder radius must be positive")
        object.__setattr__(self, "x0", tuple(float(v) for v in np.atleast_1d(self.x0)))

    @property
    def half_time(self) -> float:
        return self.c**self.gamma

    @property
    def measure(self) -> float:
        """|Q| = 2 c^gamma vol(B_c)."""
        d = len(self.x0)
        ball = math.pi ** (d / 2) / math.gamma(d / 2 + 1) * self.c**d
        return 2 * self.half_time * ball

    def to_dict(self) -> dict:
        return {"t0": self.t0, "x0": list(self.x0), "c": self.c, "gamma": self.gamma}


@dataclass(frozen=True)
class CylinderSweep:
    """Scales and centres; only cylinders fully inside the window are emitted."""

    scales: tuple[float, ...]
    centers: tuple[tuple[float, tuple[float, ...]], ...]
    gamma: float

    def cylinders(self, h: SpaceTimeField) -> Iterator[ParabolicCylinder]:
        t_lo, t_hi = h.times[0], h.times[-1]
        x_lo, x_hi = h.grid.x_axis[0], h.grid.x_axis[-1]
        for c in self.scales:
            ht = c**self.gamma
            for t0, x0 in self.centers:
                if t0 - ht < t_lo or t0 + ht > t_hi:
                    continue
                if any(v - c < x_lo or v + c > x_hi for v in x0):
                    continue
                yield ParabolicCylinder(t0, x0, c, self.gamma)

    def merged(self, other: "CylinderSweep") -> "CylinderSweep":
        if other.gamma != self.gamma:
            raise ValueError("sweeps use different anisotropy")
        scales = tuple(sorted(set(self.scales) | set(other.scales)))
        centers = tuple(sorted(set(self.centers) | set(other.centers)))
        return CylinderSweep(scales, centers, self.gamma)

    def to_dict(self) -> dict:
        return {"scales": list(self.scales), "n_centers": len(self.centers), "gamma": self.gamma}

    @classmethod
    def default(cls, h: SpaceTimeField, gamma: float, n_scales: int = 6,
                spatial_stride: int | None = None, time_stride: int | None = None) -> "CylinderSweep":
        """Dyadic scales from 4 dx up to L/4, centres on a stride-N/16 sublattice."""
        grid = h.grid
        c0 = 4 * grid.spacing
        scales = tuple(c0 * 2.0**k for k in range(n_scales) if c0 * 2.0**k <= grid.length / 4)
        sx = spatial_stride or max(1, grid.n // 16)
        st = time_stride or max(1, (h.n_times - 1) // 16)
        xs = grid.x_axis[::sx]
        ts = h.times[::st]
        centers = []
        for t0 in ts:
            for x0 in np.stack(np.meshgrid(*([xs] * grid.dim), indexing="ij"), -1).reshape(-1, grid.dim):
                centers.append((float(t0), tuple(float(v) for v in x0)))
        return cls(scales, tuple(centers), gamma)


@dataclass
class BMOResult:
    value: float
    argmax: ParabolicCylinder | None
    n_cylinders: int

    def __float__(self) -> float:
        return self.value

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "argmax": self.argmax.to_dict() if self.argmax else None,
            "n_cylinders": self.n_cylinders,
            "note": "sup over a finite sweep: a lower bound of the continuum seminorm",
        }


def _real(h: SpaceTimeField) -> np.ndarray:
    if h.domain != PHYSICAL:
        raise ValueError("seminorms need a physical field")
    vals = h.values
    if np.iscomplexobj(vals):
        imag = float(np.max(np.abs(vals.imag), initial=0.0))
        if imag > 1e-10:
            warnings.warn(
                f"field has imaginary part up to {imag:.2e}; using the real part",
                ImaginaryPartWarning,
                stacklevel=3,
            )
        vals = vals.real
    return vals


def _cells(h: SpaceTimeField, Q: ParabolicCylinder):
    """Index slices of the bounding box and the in-cylinder weights on it."""
    t = h.times
    ti0 = int(np.searchsorted(t, Q.t0 - Q.half_time, side="right"))
    ti1 = int(np.searchsorted(t, Q.t0 + Q.half_time, side="left"))
    xa = h.grid.x_axis
    box = []
    sq = 0.0
    for v in Q.x0:
        i0 = int(np.searchsorted(xa, v - Q.c, side="right"))
        i1 = int(np.searchsorted(xa, v + Q.c, side="left"))
        box.append(slice(i0, i1))
        sq = sq + ((xa[i0:i1] - v) ** 2).reshape(
            [-1 if k == len(box) - 1 else 1 for k in range(len(Q.x0))]
        )
    inside = sq < Q.c**2
    wt = h.time_weights[ti0:ti1]
    w = wt.reshape(-1, *([1] * len(Q.x0))) * inside[None] * h.grid.cell_volume
    return (slice(ti0, ti1), *box), w


def _oscillation(vals: np.ndarray, h: SpaceTimeField, Q: ParabolicCylinder) -> tuple[float, tuple, np.ndarray]:
    idx, w = _cells(h, Q)
    if np.count_nonzero(w) < MIN_CELLS:
        raise ValueError(f"cylinder holds fewer than {MIN_CELLS} grid cells")
    block = vals[idx]
    total = w.sum()
    mean = (w * block).sum() / total
    osc = float((w * np.abs(block - mean)).sum() / total)
    return osc, idx, w


def mean_oscillation(h: SpaceTimeField, Q: ParabolicCylinder) -> float:
    """(1/|Q|) int_Q |h - h_Q| with the discrete measure."""
    vals = _real(h)
    t_lo, t_hi = h.times[0], h.times[-1]
    if Q.t0 - Q.half_time < t_lo - 1e-12 or Q.t0 + Q.half_time > t_hi + 1e-12:
        raise ValueError("cylinder leaves the time window")
    return _oscillation(vals, h, Q)[0]


def _sweep(h: SpaceTimeField, sweep: CylinderSweep):
    vals = _real(h)
    for Q in sweep.cylinders(h):
        idx, w = _cells(h, Q)
        if np.count_nonzero(w) < MIN_CELLS:
            continue
        yield Q, vals, idx, w


def bmo_seminorm(h: SpaceTimeField, sweep: CylinderSweep) -> BMOResult:
    best, arg, count = 0.0, None, 0
    for Q, vals, idx, w in _sweep(h, sweep):
        block = vals[idx]
        total = w.sum()
        mean = (w * block).sum() / total
        osc = float((w * np.abs(block - mean)).sum() / total)
        count += 1
        if osc > best or arg is None:
            best, arg = osc, Q
    if count == 0:
        raise EmptySweep("no cylinder of the sweep fits inside the data window")
    return BMOResult(best, arg, count)


def _pointwise(h: SpaceTimeField, sweep: CylinderSweep, sharp: bool) -> SpaceTimeField:
    out = np.zeros(h.values.shape)
    covered = np.zeros(h.values.shape, dtype=bool)
    count = 0
    for Q, vals, idx, w in _sweep(h, sweep):
        block = vals[idx]
        total = w.sum()
        if sharp:
            mean = (w * block).sum() / total
            val = (w * np.abs(block - mean)).sum() / total
        else:
            val = (w * np.abs(block)).sum() / total
        member = w > 0
        sub = out[idx]
        sub[member] = np.maximum(sub[member], val)
        out[idx] = sub
        cov = covered[idx]
        cov[member] = True
        covered[idx] = cov
        count += 1
    if count == 0:
        raise EmptySweep("no cylinder of the sweep fits inside the data window")
    if not covered.all():
        warnings.warn(
            f"{np.count_nonzero(~covered)} points lie in no sweep cylinder; set to 0",
            CoverageWarning,
            stacklevel=3,
        )
    return h.with_values(out)


def sharp_function(h: SpaceTimeField, sweep: CylinderSweep) -> SpaceTimeField:
    """h^#(t, x) = sup over sweep cylinders containing (t, x) of the mean oscillation."""
    return _pointwise(h, sweep, sharp=True)


def maximal_function(h: SpaceTimeField, sweep: CylinderSweep) -> SpaceTimeField:
    """M h(t, x) = sup over sweep cylinders containing (t, x) of the mean of |h|."""
    return _pointwise(h, sweep, sharp=False)


def sweep_table(h: SpaceTimeField, sweep: CylinderSweep) -> list[tuple]:
    rows = []
    for Q, vals, idx, w in _sweep(h, sweep):
        block = vals[idx]
        total = w.sum()
        mean = (w * block).sum() / total
        rows.append((Q.t0, *Q.x0, Q.c, float((w * np.abs(block - mean)).sum() / total)))
    return rows


def export_sweep_csv(h: SpaceTimeField, sweep: CylinderSweep, path) -> Path:
    path = Path(path)
    d = h.grid.dim
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t0", *(f"x0_{i}" for i in range(d)), "c", "oscillation"])
        for row in sweep_table(h, sweep):
            w.writerow([repr(float(v)) for v in row])
    return path


# ---------------------------------------------------------------------------
# norms and time weights


def gregory_weights(times: np.ndarray, breakpoints: Sequence[float] = ()) -> np.ndarray:
    """Fourth-order end-corrected trapezoid weights, restarted at each breakpoint.

    For integrands that are smooth between breakpoints but have kinks at
    them; breakpoints inside the window must coincide with sample times.
    """
    times = np.asarray(times, dtype=float)
    tol = 1e-9 * max(1.0, float(np.max(np.abs(times))))
    cuts = [0]
    for b in breakpoints:
        if times[0] < b < times[-1]:
            k = int(np.argmin(np.abs(times - b)))
            if abs(times[k] - b) > tol:
                raise ValueError(f"breakpoint {b} is not a sample time")
            cuts.append(k)
    cuts.append(times.size - 1)
    w = np.zeros_like(times)
    corr = np.array([3 / 8, 7 / 6, 23 / 24])
    for a, b in zip(cuts, cuts[1:]):
        if b <= a:
            continue
        seg = times[a : b + 1]
        dt = np.diff(seg)
        if b - a >= 6 and np.allclose(dt, dt[0], rtol=1e-9, atol=0):
            ww = np.ones(b - a + 1)
            ww[:3] = corr
            ww[-3:] = corr[::-1]
            w[a : b + 1] += dt[0] * ww
        else:
            w[a:b] += 0.5 * dt
            w[a + 1 : b + 1] += 0.5 * dt
    return w


def lp_norm(h: SpaceTimeField, p: float, time_weights: np.ndarray | None = None) -> float:
    """(sum w |h|^p)^{1/p} with trapezoid time weights and dx^d cells; p = inf is the max."""
    if not p >= 1:
        raise ValueError("p must be >= 1")
    a = np.abs(h.values)
    if math.isinf(p):
        return float(a.max())
    wt = h.time_weights if time_weights is None else time_weights
    axes = tuple(range(1, a.ndim))
    scale = a.max()
    if scale == 0:
        return 0.0
    per_t = np.sum((a / scale) ** p, axis=axes) * h.grid.cell_volume
    return float(scale * (wt @ per_t) ** (1.0 / p))


def inner_product(a: SpaceTimeField, b: SpaceTimeField,
                  time_weights: np.ndarray | None = None) -> complex:
    """int a * b dx dt (no conjugation)."""
    wt = a.time_weights if time_weights is None else time_weights
    axes = tuple(range(1, a.values.ndim))
    per_t = np.sum(a.values * b.values, axis=axes) * a.grid.cell_volume
    return complex(wt @ per_t)
