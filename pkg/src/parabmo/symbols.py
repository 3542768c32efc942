"""Time-dependent Fourier multipliers psi(t, xi) and their exact time integrals.

Every family is piecewise constant in time (rough coefficients are modelled
as step functions with arbitrary breakpoints), so integrals over time are
sums of value x overlap length and are exact up to rounding.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np


class SymbolError(ValueError):
    """Raised for malformed symbols or invalid evaluation points."""


# ---------------------------------------------------------------------------
# rough coefficients


@dataclass(frozen=True)
class RoughCoefficient:
    """Step function in time.

    ``values[i]`` holds on ``[breakpoints[i-1], breakpoints[i])``; ``values[0]``
    covers ``(-inf, breakpoints[0])`` and ``values[-1]`` covers
    ``[breakpoints[-1], inf)``.
    """

    breakpoints: tuple[float, ...]
    values: tuple[complex, ...]

    def __post_init__(self):
        bps = tuple(float(b) for b in self.breakpoints)
        vals = tuple(complex(v) for v in self.values)
        if len(vals) != len(bps) + 1:
            raise SymbolError(
                f"need exactly one value per interval: {len(bps)} breakpoints "
                f"give {len(bps) + 1} intervals, got {len(vals)} values"
            )
        if not all(math.isfinite(b) for b in bps):
            raise SymbolError("breakpoints must be finite")
        if any(b1 <= b0 for b0, b1 in zip(bps, bps[1:])):
            raise SymbolError("breakpoints must be strictly increasing")
        if not all(math.isfinite(v.real) and math.isfinite(v.imag) for v in vals):
            raise SymbolError("coefficient values must be finite")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, value: complex) -> "RoughCoefficient":
        return cls((), (value,))

    @classmethod
    def random(
        cls,
        rng: np.random.Generator,
        n_breaks: int,
        t_min: float,
        t_max: float,
        low: float,
        high: float,
        imag: float = 0.0,
    ) -> "RoughCoefficient":
        """Random step function with ``n_breaks`` jumps in ``(t_min, t_max)``.

        Real parts are uniform in ``(low, high)``, imaginary parts uniform in
        ``(-imag, imag)``.
        """
        bps = np.sort(rng.uniform(t_min, t_max, size=n_breaks))
        re = rng.uniform(low, high, size=n_breaks + 1)
        im = rng.uniform(-imag, imag, size=n_breaks + 1) if imag else np.zeros(n_breaks + 1)
        return cls(tuple(bps), tuple(re + 1j * im))

    @property
    def is_constant(self) -> bool:
        return not self.breakpoints

    def index(self, t: float) -> int:
        return int(np.searchsorted(self.breakpoints, t, side="right"))

    def __call__(self, t: float) -> complex:
        return self.values[self.index(t)]

    def integral(self, s: float, t: float) -> complex:
        """Exact integral over ``[s, t]`` (``s <= t``)."""
        if t < s:
            raise SymbolError("integral needs s <= t")
        edges = [s, *(b for b in self.breakpoints if s < b < t), t]
        total = 0j
        for a, b in zip(edges, edges[1:]):
            total += self(0.5 * (a + b)) * (b - a)
        return total

    def reflected(self) -> "RoughCoefficient":
        """The coefficient ``t -> a(-t)``."""
        return RoughCoefficient(
            tuple(-b for b in reversed(self.breakpoints)), tuple(reversed(self.values))
        )

    def real_bounds(self) -> tuple[float, float]:
        re = [v.real for v in self.values]
        return min(re), max(re)

    def to_dict(self) -> dict:
        return {
            "breakpoints": list(self.breakpoints),
            "values_re": [v.real for v in self.values],
            "values_im": [v.imag for v in self.values],
        }


# ---------------------------------------------------------------------------
# angular densities for the Levy family


@dataclass(frozen=True)
class Density:
    """Zero-order homogeneous angular density m(w) on the unit sphere."""

    name: str
    params: tuple[tuple[str, object], ...] = ()

    @property
    def kwargs(self) -> dict:
        return dict(self.params)

    def __call__(self, w: np.ndarray) -> np.ndarray:
        return _DENSITIES[self.name](w, **self.kwargs)

    def antipodal_symmetric(self) -> bool:
        if self.name == "uniform":
            return True
        if self.name == "two-bump":
            return True
        if self.name == "indicator-cap":
            return bool(self.kwargs.get("symmetric", False))
        return False


def _unit_direction(direction, d):
    e = np.zeros(d)
    direction = np.atleast_1d(np.asarray(direction, dtype=float))
    e[: min(d, direction.size)] = direction[:d]
    norm = np.linalg.norm(e)
    if norm == 0:
        e[0] = 1.0
        norm = 1.0
    return e / norm


def _uniform(w, level=1.0):
    return np.full(w.shape[:-1], float(level))


def _two_bump(w, direction=(1.0, 0.0, 0.0), amplitude=1.0, concentration=4.0, floor=0.5):
    e = _unit_direction(direction, w.shape[-1])
    c = w @ e
    k = float(concentration)
    return floor + amplitude * (np.exp(k * (c - 1.0)) + np.exp(k * (-c - 1.0)))


def _indicator_cap(
    w, direction=(1.0, 0.0, 0.0), half_angle=0.6, height=1.0, floor=0.25,
    edge_width=0.15, symmetric=False,
):
    # logistic edge in w.e (not in the angle, which has a kink at w = e)
    # keeps m smooth on the whole sphere; edge_width is in angle units
    e = _unit_direction(direction, w.shape[-1])
    c = w @ e
    c0 = math.cos(half_angle)
    width = edge_width * math.sin(half_angle)
    cap = 0.5 * (1.0 + np.tanh((c - c0) / width))
    if symmetric:
        cap = cap + 0.5 * (1.0 + np.tanh((-c - c0) / width))
    return floor + height * cap


_DENSITIES: dict[str, Callable[..., np.ndarray]] = {
    "uniform": _uniform,
    "two-bump": _two_bump,
    "indicator-cap": _indicator_cap,
}


def density(name: str, **params) -> Density:
    if name not in _DENSITIES:
        raise SymbolError(f"unknown density {name!r}; choose from {sorted(_DENSITIES)}")
    return Density(name, tuple(sorted(params.items())))


# ---------------------------------------------------------------------------
# families


class Family:
    order: float

    def breakpoints(self) -> tuple[float, ...]:
        return ()

    def evaluate(self, t: float, xi: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def reflected(self) -> "Family":
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError


def _multi_indices(d: int, order: int) -> list[tuple[int, ...]]:
    return [a for a in itertools.product(range(order + 1), repeat=d) if sum(a) == order]


def _monomial(xi: np.ndarray, alpha: Sequence[int]) -> np.ndarray:
    out = np.ones(xi.shape[:-1])
    for i, a in enumerate(alpha):
        if a:
            out = out * xi[..., i] ** a
    return out


@dataclass(frozen=True)
class TwoMOrder(Family):
    """psi = -sum a^{ab}(t) xi^a xi^b over |a| = |b| = m."""

    m: int
    coefficients: tuple[tuple[tuple[tuple[int, ...], tuple[int, ...]], RoughCoefficient], ...]

    def __post_init__(self):
        if self.m < 1:
            raise SymbolError("m must be >= 1")
        for (a, b), _ in self.coefficients:
            if sum(a) != self.m or sum(b) != self.m or len(a) != len(b):
                raise SymbolError(f"multi-indices {a}, {b} are not of order {self.m}")

    @property
    def order(self) -> float:
        return 2.0 * self.m

    @property
    def dim(self) -> int:
        return len(self.coefficients[0][0][0])

    def breakpoints(self):
        return tuple(sorted({b for _, c in self.coefficients for b in c.breakpoints}))

    def evaluate(self, t, xi):
        out = np.zeros(xi.shape[:-1], dtype=complex)
        for (a, b), coef in self.coefficients:
            out -= coef(t) * _monomial(xi, a) * _monomial(xi, b)
        return out

    def reflected(self):
        return TwoMOrder(self.m, tuple((ab, c.reflected()) for ab, c in self.coefficients))

    def describe(self):
        return {
            "family": "two-m-order",
            "m": self.m,
            "coefficients": [
                {"alpha": list(a), "beta": list(b), **c.to_dict()}
                for (a, b), c in self.coefficients
            ],
        }


@dataclass(frozen=True)
class Fractional(Family):
    """psi = -a(t) |xi|^gamma."""

    gamma: float
    coefficient: RoughCoefficient

    def __post_init__(self):
        if not self.gamma > 0:
            raise SymbolError("gamma must be positive")

    @property
    def order(self) -> float:
        return self.gamma

    def breakpoints(self):
        return self.coefficient.breakpoints

    def evaluate(self, t, xi):
        return -self.coefficient(t) * np.linalg.norm(xi, axis=-1) ** self.gamma

    def reflected(self):
        return Fractional(self.gamma, self.coefficient.reflected())

    def describe(self):
        return {"family": "fractional", "gamma": self.gamma, **self.coefficient.to_dict()}


@dataclass(frozen=True)
class LevySpec:
    k: int
    gamma: float
    density: Density = field(default_factory=lambda: density("uniform"))
    c1: float = 1.0
    c2: float = 1.0
    quadrature_nodes: int = 256
    time_scale: RoughCoefficient | None = None

    def __post_init__(self):
        if self.k < 0:
            raise SymbolError("k must be a nonnegative integer")
        if not 0 < self.gamma < 2:
            raise SymbolError("Levy gamma must lie in (0, 2)")
        if self.c1 <= 0 or self.c2 <= 0:
            raise SymbolError("c1 and c2 must be positive")
        if self.quadrature_nodes < 8:
            raise SymbolError("need at least 8 quadrature nodes")
        if self.time_scale is not None:
            lo, _ = self.time_scale.real_bounds()
            if lo <= 0 or any(v.imag for v in self.time_scale.values):
                raise SymbolError("Levy time scale must be real and positive")


def _frame(xi_hat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Two unit vectors completing ``xi_hat`` (shape (..., 3)) to a frame."""
    ref = np.zeros_like(xi_hat)
    idx = np.argmin(np.abs(xi_hat), axis=-1)
    np.put_along_axis(ref, idx[..., None], 1.0, axis=-1)
    e1 = ref - np.sum(ref * xi_hat, axis=-1, keepdims=True) * xi_hat
    e1 /= np.linalg.norm(e1, axis=-1, keepdims=True)
    e2 = np.cross(xi_hat, e1)
    return e1, e2


@dataclass(frozen=True)
class Levy(Family):
    """Symbol of (-Delta)^k composed with a stable-type integro-differential operator.

    The spherical integral is computed with nodes aligned to the direction of
    xi, so the only non-smooth points of the integrand (w orthogonal to xi) sit
    at fixed node positions and the discrete symbol stays smooth in xi.
    """

    spec: LevySpec
    dim: int

    @property
    def order(self) -> float:
        return 2 * self.spec.k + self.spec.gamma

    def breakpoints(self):
        return self.spec.time_scale.breakpoints if self.spec.time_scale else ()

    def _nodes(self, xi_hat: np.ndarray):
        """Nodes w (..., n, d), weights (n,) and cosines w.xi_hat (n,)."""
        d = self.dim
        n = self.spec.quadrature_nodes
        if d == 1:
            cos = np.array([1.0, -1.0])
            w = cos[None, :, None] * xi_hat[..., None, :]
            return w, np.ones(2), cos
        if d == 2:
            n4 = 4 * max(2, n // 4)
            theta = 2 * np.pi * np.arange(n4) / n4
            cos, sin = np.cos(theta), np.sin(theta)
            cos[np.abs(cos) < 1e-15] = 0.0
            perp = np.stack([-xi_hat[..., 1], xi_hat[..., 0]], axis=-1)
            w = cos[:, None] * xi_hat[..., None, :] + sin[:, None] * perp[..., None, :]
            return w, np.full(n4, 2 * np.pi / n4), cos
        if d == 3:
            n_phi = max(4, 2 * int(round(math.sqrt(n) / 2)))
            n_half = max(2, n_phi // 2)
            g, gw = np.polynomial.legendre.leggauss(n_half)
            u = np.concatenate([0.5 * (g + 1), -0.5 * (g + 1)])
            uw = np.concatenate([0.5 * gw, 0.5 * gw])
            phi = 2 * np.pi * np.arange(n_phi) / n_phi
            uu, pp = np.meshgrid(u, phi, indexing="ij")
            uu, pp = uu.ravel(), pp.ravel()
            weights = np.repeat(uw, n_phi) * (2 * np.pi / n_phi)
            e1, e2 = _frame(xi_hat)
            r = np.sqrt(1 - uu**2)
            w = (
                uu[:, None] * xi_hat[..., None, :]
                + (r * np.cos(pp))[:, None] * e1[..., None, :]
                + (r * np.sin(pp))[:, None] * e2[..., None, :]
            )
            return w, weights, uu
        raise SymbolError("Levy symbols are implemented for d in {1, 2, 3}")

    def _frozen(self, xi: np.ndarray) -> np.ndarray:
        spec = self.spec
        g = spec.gamma
        norm = np.linalg.norm(xi, axis=-1)
        out = np.zeros(xi.shape[:-1], dtype=complex)
        nz = norm > 0
        if not np.any(nz):
            return out
        xn = xi[nz]
        rn = norm[nz]
        xi_hat = xn / rn[:, None]
        out_nz = np.empty(xn.shape[0], dtype=complex)
        chunk = max(1, 2**20 // max(spec.quadrature_nodes, 2))
        for lo in range(0, xn.shape[0], chunk):
            sl = slice(lo, lo + chunk)
            w, weights, cos = self._nodes(xi_hat[sl])
            m = spec.density(w)
            u = rn[sl, None] * cos[None, :]
            au = np.abs(u)
            sgn = np.sign(u)
            if g == 1.0:
                with np.errstate(divide="ignore", invalid="ignore"):
                    log_au = np.where(au > 0, np.log(np.where(au > 0, au, 1.0)), 0.0)
                phase = -(2.0 / np.pi) * sgn * log_au
            else:
                phase = spec.c2 * sgn
            integrand = au**g * (1.0 - 1j * phase) * m
            out_nz[sl] = integrand @ weights
        out[nz] = -spec.c1 * rn ** (2 * spec.k) * out_nz
        return out

    def evaluate(self, t, xi):
        scale = self.spec.time_scale(t).real if self.spec.time_scale else 1.0
        return scale * self._frozen(xi)

    def reflected(self):
        ts = self.spec.time_scale
        if ts is None:
            return self
        spec = LevySpec(
            self.spec.k, self.spec.gamma, self.spec.density, self.spec.c1,
            self.spec.c2, self.spec.quadrature_nodes, ts.reflected(),
        )
        return Levy(spec, self.dim)

    def cancellation_residual(self) -> float:
        """|sum over nodes of w m(w)|, the discrete first angular moment."""
        xi_hat = np.eye(self.dim)[:1]
        w, weights, _ = self._nodes(xi_hat)
        m = self.spec.density(w)
        moment = np.einsum("...nd,...n,n->...d", w, m, weights)
        return float(np.max(np.abs(moment)))

    def describe(self):
        s = self.spec
        return {
            "family": "levy",
            "k": s.k,
            "gamma": s.gamma,
            "density": s.density.name,
            "density_params": {k: v for k, v in s.density.params},
            "c1": s.c1,
            "c2": s.c2,
            "quadrature_nodes": s.quadrature_nodes,
            "time_scale": s.time_scale.to_dict() if s.time_scale else None,
        }


@dataclass(frozen=True)
class Composition(Family):
    """psi = -(-psi1)^a (-psi2)^b on the principal branch."""

    a: float
    b: float
    first: "Symbol"
    second: "Symbol"

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise SymbolError("composition powers must be positive")
        if self.first.dim != self.second.dim:
            raise SymbolError("composed symbols must share the dimension")

    @property
    def order(self) -> float:
        return self.a * self.first.gamma + self.b * self.second.gamma

    def breakpoints(self):
        return tuple(sorted(set(self.first.breakpoints) | set(self.second.breakpoints)))

    def evaluate(self, t, xi):
        m1 = -self.first.family.evaluate(t, xi)
        m2 = -self.second.family.evaluate(t, xi)
        nz = np.linalg.norm(xi, axis=-1) > 0
        if np.any((m1.real <= 0) & nz) or np.any((m2.real <= 0) & nz):
            raise SymbolError(
                "composition branch undefined: Re[-psi_i] <= 0 at a sample point"
            )
        out = np.zeros(xi.shape[:-1], dtype=complex)
        out[nz] = -(m1[nz] ** self.a) * (m2[nz] ** self.b)
        return out

    def reflected(self):
        return Composition(self.a, self.b, self.first.reflected(), self.second.reflected())

    def describe(self):
        return {
            "family": "composition",
            "a": self.a,
            "b": self.b,
            "first": self.first.describe(),
            "second": self.second.describe(),
        }


# ---------------------------------------------------------------------------
# the symbol


@dataclass(frozen=True)
class Symbol:
    """A multiplier psi(t, xi) of order ``gamma`` with ellipticity ``nu``.

    ``nu`` is the constant in Re psi <= -nu |xi|^gamma; it drives the decay
    guards and the majorant H(t, xi) = |xi|^gamma exp(-nu t |xi|^gamma).
    """

    family: Family
    nu: float
    dim: int
    name: str = ""

    def __post_init__(self):
        if not (self.nu > 0 and math.isfinite(self.nu)):
            raise SymbolError("nu must be positive")
        if self.dim < 1:
            raise SymbolError("dim must be >= 1")
        if not self.family.order > 0:
            raise SymbolError("order must be positive")
        if isinstance(self.family, TwoMOrder) and self.family.dim != self.dim:
            raise SymbolError("coefficient multi-indices do not match dim")
        if isinstance(self.family, Levy):
            if self.family.dim != self.dim:
                raise SymbolError("Levy family dimension mismatch")
            if self.family.spec.gamma == 1.0:
                res = self.family.cancellation_residual()
                if res > 1e-10:
                    raise SymbolError(
                        f"gamma = 1 needs a vanishing first angular moment of m; got {res:.3e}"
                    )
        if isinstance(self.family, Composition) and self.family.first.dim != self.dim:
            raise SymbolError("composition dimension mismatch")

    @property
    def gamma(self) -> float:
        return float(self.family.order)

    @cached_property
    def breakpoints(self) -> tuple[float, ...]:
        return tuple(self.family.breakpoints())

    @property
    def time_independent(self) -> bool:
        return not self.breakpoints

    def reflected(self) -> "Symbol":
        """The symbol r -> psi(-r, xi)."""
        name = f"{self.name}-reflected" if self.name else ""
        return Symbol(self.family.reflected(), self.nu, self.dim, name)

    def describe(self) -> dict:
        return {
            "name": self.name,
            "gamma": self.gamma,
            "nu": self.nu,
            "dim": self.dim,
            **self.family.describe(),
        }


def _as_xi(xi, dim: int) -> np.ndarray:
    arr = np.asarray(xi, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if dim == 1 and arr.shape[-1:] != (1,):
        arr = arr[..., None]
    if arr.shape[-1] != dim:
        raise SymbolError(f"frequency vectors must have trailing dimension {dim}")
    if not np.all(np.isfinite(arr)):
        raise SymbolError("non-finite frequency")
    return arr


def eval_symbol(sym: Symbol, t: float, xi) -> np.ndarray | complex:
    """psi(t, xi). ``xi`` may be a single vector or an array (..., d); psi(t, 0) = 0."""
    if not math.isfinite(t):
        raise SymbolError("non-finite time")
    arr = _as_xi(xi, sym.dim)
    single = arr.ndim == 1
    out = sym.family.evaluate(t, arr[None] if single else arr)
    return complex(out[0]) if single else out


# ---------------------------------------------------------------------------
# piecewise tables and exact time integrals


class SymbolSamples:
    """psi on a fixed frequency set, tabulated per time piece.

    ``values[j]`` is psi on the j-th piece of the breakpoint partition, so
    the integral over any [s, t] is sum_j overlap_j * values[j].
    """

    def __init__(self, sym: Symbol, xi: np.ndarray):
        self.symbol = sym
        self.breakpoints = np.asarray(sym.breakpoints, dtype=float)
        arr = _as_xi(xi, sym.dim)
        bps = sym.breakpoints
        if not bps:
            reps = [0.0]
        else:
            reps = [bps[0] - 1.0]
            reps += [0.5 * (a + b) for a, b in zip(bps, bps[1:])]
            reps += [bps[-1] + 1.0]
        self.values = np.stack([sym.family.evaluate(r, arr) for r in reps])

    def piece(self, t: float) -> int:
        return int(np.searchsorted(self.breakpoints, t, side="right"))

    def value(self, t: float) -> np.ndarray:
        return self.values[self.piece(t)]

    def segments(self, s: float, t: float) -> list[tuple[float, float, int]]:
        """Sub-intervals of [s, t] on which psi is constant, with piece index."""
        inner = self.breakpoints[(self.breakpoints > s) & (self.breakpoints < t)]
        edges = [s, *inner.tolist(), t]
        return [(a, b, self.piece(0.5 * (a + b))) for a, b in zip(edges, edges[1:])]

    def integral(self, s: float, t: float) -> np.ndarray:
        if not t > s:
            raise SymbolError(f"integrate_symbol needs s < t, got s={s}, t={t}")
        total = np.zeros(self.values.shape[1:], dtype=complex)
        for a, b, j in self.segments(s, t):
            total += self.values[j] * (b - a)
        return total


def integrate_symbol(sym: Symbol, s: float, t: float, xi) -> np.ndarray | complex:
    """Exact integral of psi(r, xi) over r in [s, t]."""
    if not (math.isfinite(s) and math.isfinite(t)):
        raise SymbolError("non-finite time")
    if not t > s:
        raise SymbolError(f"integrate_symbol needs s < t, got s={s}, t={t}")
    arr = _as_xi(xi, sym.dim)
    single = arr.ndim == 1
    out = SymbolSamples(sym, arr[None] if single else arr).integral(s, t)
    return complex(out[0]) if single else out


# ---------------------------------------------------------------------------
# condition (A1) certification


@dataclass
class ConditionReport:
    symbol: dict
    declared_nu: float
    nu_lower: float
    nu_upper: float
    slack: float
    max_order: int
    n_samples: int
    ellipticity_violations: list[dict]
    convergence_failures: list[dict]
    worst_ratio_by_order: dict[int, float]
    passed: bool

    @property
    def nu_certified(self) -> float:
        return min(self.nu_lower, self.nu_upper)

    def to_dict(self) -> dict:
        return {
            "symbol": self.symbol,
            "declared_nu": self.declared_nu,
            "nu_lower": self.nu_lower,
            "nu_upper": self.nu_upper,
            "nu_certified": self.nu_certified,
            "slack": self.slack,
            "max_order": self.max_order,
            "n_samples": self.n_samples,
            "ellipticity_violations": self.ellipticity_violations,
            "convergence_failures": self.convergence_failures,
            "worst_ratio_by_order": {str(k): v for k, v in self.worst_ratio_by_order.items()},
            "passed": self.passed,
        }


_FIRST = {-1: -0.5, 1: 0.5}
_SECOND = {-1: 1.0, 0: -2.0, 1: 1.0}


def _stencil(alpha: Sequence[int]) -> list[tuple[np.ndarray, float]]:
    """Tensor-product central stencil for D^alpha with unit step."""
    per_axis = []
    for a in alpha:
        if a == 0:
            per_axis.append({0: 1.0})
        elif a == 1:
            per_axis.append(_FIRST)
        elif a == 2:
            per_axis.append(_SECOND)
        else:
            raise SymbolError("stencils implemented up to second order per axis")
    out = []
    for combo in itertools.product(*(ax.items() for ax in per_axis)):
        offs = np.array([c[0] for c in combo], dtype=float)
        coef = float(np.prod([c[1] for c in combo]))
        out.append((offs, coef))
    return out


def _fd(sym: Symbol, t: float, xi: np.ndarray, alpha, h: np.ndarray) -> np.ndarray:
    """Central difference of order |alpha| at points xi (n, d) with steps h (n,)."""
    stencil = _stencil(alpha)
    pts = np.stack([xi + h[:, None] * offs[None, :] for offs, _ in stencil])
    vals = sym.family.evaluate(t, pts.reshape(-1, sym.dim)).reshape(len(stencil), -1)
    coefs = np.array([c for _, c in stencil])
    return (coefs[:, None] * vals).sum(axis=0) / h ** sum(alpha)


def certify_A1(
    sym: Symbol,
    xi_samples,
    t_samples: Sequence[float],
    fd_step_rel: float = 1e-3,
    slack: float = 1.05,
    convergence_tol: float = 1e-4,
) -> ConditionReport:
    """Sample Re psi <= -nu|xi|^gamma and |D^a psi| <= nu^{-1}|xi|^{gamma-|a|}.

    Derivatives use second-order central differences with step
    ``fd_step_rel * |xi|`` and one Richardson level.  ``nu_lower`` is the
    largest ellipticity constant consistent with the samples, ``nu_upper``
    the largest constant allowed by the derivative bounds (|a| from 0 to
    floor(d/2) + 1).  The symbol passes when the declared ``nu`` is within
    ``slack`` of ``nu_lower`` and every derivative estimate converged.
    """
    if not 0 < fd_step_rel <= 0.1:
        raise SymbolError("fd_step_rel must lie in (0, 0.1]")
    xi = _as_xi(xi_samples, sym.dim).reshape(-1, sym.dim)
    norm = np.linalg.norm(xi, axis=-1)
    if np.any(norm == 0):
        raise SymbolError("xi samples must be nonzero")
    g = sym.gamma
    d = sym.dim
    max_order = d // 2 + 1
    nu_lower = math.inf
    nu_upper = math.inf
    violations: list[dict] = []
    failures: list[dict] = []
    worst: dict[int, float] = {k: 0.0 for k in range(max_order + 1)}
    for t in t_samples:
        psi = sym.family.evaluate(t, xi)
        ell = -psi.real / norm**g
        nu_lower = min(nu_lower, float(ell.min()))
        for i in np.nonzero(psi.real > 0)[0]:
            violations.append({"t": float(t), "xi": xi[i].tolist(), "re_psi": float(psi[i].real)})
        ratio0 = np.abs(psi) / norm**g
        worst[0] = max(worst[0], float(ratio0.max()))
        for order in range(1, max_order + 1):
            for alpha in _multi_indices(d, order):
                h = fd_step_rel * norm
                coarse = _fd(sym, t, xi, alpha, h)
                fine = _fd(sym, t, xi, alpha, 0.5 * h)
                rich = (4.0 * fine - coarse) / 3.0
                scale = np.abs(psi) / norm**order
                bad = np.abs(rich - fine) > convergence_tol * np.maximum(scale, 1e-300)
                for i in np.nonzero(bad)[0]:
                    failures.append({
                        "t": float(t), "xi": xi[i].tolist(), "alpha": list(alpha),
                        "estimate": [rich[i].real, rich[i].imag],
                    })
                ratio = np.abs(rich) / norm ** (g - order)
                worst[order] = max(worst[order], float(ratio.max()))
    top = max(worst.values())
    nu_upper = 1.0 / top if top > 0 else math.inf
    passed = not violations and not failures and sym.nu <= slack * nu_lower
    return ConditionReport(
        symbol=sym.describe(),
        declared_nu=sym.nu,
        nu_lower=nu_lower,
        nu_upper=nu_upper,
        slack=slack,
        max_order=max_order,
        n_samples=len(xi) * len(t_samples),
        ellipticity_violations=violations,
        convergence_failures=failures,
        worst_ratio_by_order=worst,
        passed=passed,
    )


def default_xi_samples(dim: int, n_radii: int = 13, n_dirs: int = 7, r_min=0.1, r_max=10.0,
                       seed: int = 0) -> np.ndarray:
    """Log-spaced radii times a fixed set of directions."""
    rng = np.random.default_rng(seed)
    radii = np.logspace(np.log10(r_min), np.log10(r_max), n_radii)
    if dim == 1:
        dirs = np.array([[1.0], [-1.0]])
    else:
        dirs = rng.normal(size=(n_dirs, dim))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        dirs = np.vstack([np.eye(dim), dirs])
    return (radii[:, None, None] * dirs[None, :, :]).reshape(-1, dim)


# ---------------------------------------------------------------------------
# constructors and catalog


def second_order(matrix, nu: float, name: str = "") -> Symbol:
    """psi = -sum_ij a^{ij}(t) xi_i xi_j; matrix entries are numbers or RoughCoefficients."""
    rows = [list(r) for r in matrix]
    d = len(rows)
    coeffs = []
    for i in range(d):
        for j in range(d):
            c = rows[i][j]
            if not isinstance(c, RoughCoefficient):
                if c == 0:
                    continue
                c = RoughCoefficient.constant(c)
            a = tuple(int(k == i) for k in range(d))
            b = tuple(int(k == j) for k in range(d))
            coeffs.append(((a, b), c))
    return Symbol(TwoMOrder(1, tuple(coeffs)), nu, d, name)


def heat(nu: float = 1.0, dim: int = 1) -> Symbol:
    """psi = -nu |xi|^2."""
    return second_order(np.eye(dim) * nu, nu, name="heat")


def fractional(gamma: float, coefficient: RoughCoefficient | complex = 1.0,
               nu: float | None = None, dim: int = 1, name: str = "") -> Symbol:
    """psi = -a(t)|xi|^gamma; ``nu`` defaults to the smallest real part of a."""
    if not isinstance(coefficient, RoughCoefficient):
        coefficient = RoughCoefficient.constant(coefficient)
    if nu is None:
        nu = coefficient.real_bounds()[0]
    return Symbol(Fractional(gamma, coefficient), nu, dim, name or "fractional")


def model_symbol(nu: float, gamma: float, dim: int = 1) -> Symbol:
    """psi = -nu |xi|^gamma."""
    return fractional(gamma, nu, nu=nu, dim=dim, name="model")


def polyharmonic(m: int, coefficient: RoughCoefficient | complex, nu: float,
                 dim: int = 1) -> Symbol:
    """psi = -a(t)|xi|^{2m} written as sum a^{ab} xi^a xi^b."""
    if not isinstance(coefficient, RoughCoefficient):
        coefficient = RoughCoefficient.constant(coefficient)
    # |xi|^{2m} = (sum_i xi_i^2)^m expanded as multinomial over |a| = m
    coeffs = []
    for a in _multi_indices(dim, m):
        mult = math.factorial(m) / math.prod(math.factorial(k) for k in a)
        c = RoughCoefficient(coefficient.breakpoints, tuple(mult * v for v in coefficient.values))
        coeffs.append(((a, a), c))
    return Symbol(TwoMOrder(m, tuple(coeffs)), nu, dim, f"polyharmonic-{m}")


def levy(spec: LevySpec, nu: float, dim: int, name: str = "") -> Symbol:
    return Symbol(Levy(spec, dim), nu, dim, name or "levy")


def compose(a: float, b: float, first: Symbol, second: Symbol, nu: float,
            name: str = "") -> Symbol:
    return Symbol(Composition(a, b, first, second), nu, first.dim, name or "composition")


def levy_uniform_closed_form(gamma: float, dim: int, c1: float = 1.0) -> float:
    """-psi(e_1) for the k = 0 Levy symbol with m = 1: c1 * int |w_1|^gamma dS."""
    # int_{S^{d-1}} |w_1|^g dS = 2 pi^{(d-1)/2} Gamma((g+1)/2) / Gamma((g+d)/2)
    return c1 * 2 * math.pi ** ((dim - 1) / 2) * math.gamma((gamma + 1) / 2) / math.gamma((gamma + dim) / 2)


def catalog(dim: int = 1) -> dict[str, Symbol]:
    """Shipped example symbols with declared ellipticity constants."""
    rough = RoughCoefficient((-1.0, 0.3, 1.7), (1.0, 2.0, 0.7 + 0.3j, 1.4))
    out = {
        "heat": heat(1.0, dim),
        "fractional-0.8": fractional(0.8, 1.0, dim=dim, name="fractional-0.8"),
        "fractional-1.5": fractional(1.5, 1.0, dim=dim, name="fractional-1.5"),
        "A2-rough": fractional(1.5, rough, nu=0.7, dim=dim, name="A2-rough"),
        "biharmonic-rough": polyharmonic(2, RoughCoefficient((0.0,), (1.0, 0.5 + 0.2j)), 0.5, dim),
        "composition": compose(
            0.5, 1.0, heat(1.0, dim), fractional(0.5, 2.0, dim=dim), nu=2.0, name="composition"
        ),
    }
    spec15 = LevySpec(0, 1.5)
    ell = levy_uniform_closed_form(1.5, dim)
    out["levy-1.5"] = levy(spec15, 0.999 * ell, dim, "levy-1.5")
    if dim >= 2:
        spec1 = LevySpec(0, 1.0, density("two-bump"))
        out["levy-1-two-bump"] = levy(spec1, 0.5 * levy_uniform_closed_form(1.0, dim), dim,
                                      "levy-1-two-bump")
        spec_cap = LevySpec(1, 0.8, density("indicator-cap", symmetric=True))
        out["levy-cap"] = levy(spec_cap, 0.2 * levy_uniform_closed_form(0.8, dim), dim, "levy-cap")
    return out
