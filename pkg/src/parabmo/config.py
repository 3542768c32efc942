"""Experiment configuration: TOML with a schema version; unknown keys are errors."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import tomli

from .corpus import GENERATORS, Corpus
from .spectral import SpectralGrid
from .symbols import (
    LevySpec,
    RoughCoefficient,
    Symbol,
    catalog,
    compose,
    density,
    fractional,
    heat,
    levy,
    model_symbol,
    polyharmonic,
    second_order,
)

CONFIG_SCHEMA_VERSION = 1

EXPERIMENTS = (
    "a1-check",
    "tail-scaling",
    "shift-scaling",
    "timediff-scaling",
    "bmo-certify",
    "lp-certify",
    "interpolation-demo",
    "kernel-oracle",
    "duality-check",
    "scaling-identity",
)

_ROUGH = {"breakpoints": [-0.7, 0.2, 1.1], "values": [1.0, 2.0, [0.8, 0.2], 1.5]}

# per experiment: default grid, time grid, symbol table and params
DEFAULTS: dict[str, dict] = {
    "a1-check": {
        "grid": {"dim": 1, "n": 1024, "length": 40.0},
        "symbol": {"catalog": "heat"},
        "params": {"duration_min": 1e-3, "duration_max": 10.0, "n_durations": 9, "tol": 1e-6},
    },
    "tail-scaling": {
        "grid": {"dim": 1, "n": 8192, "length": 20.0},
        "symbol": {"catalog": "heat"},
        "params": {
            "r": -1.0, "s": 0.0, "c_min": 0.0, "c_max": 1.0, "n_c": 9,
            "duration_min": 0.01, "duration_max": 1.0, "n_durations": 9, "c_fixed": 0.1,
            "epsilon": 0.0, "slope_tol": 0.15, "residual_tol": 0.05,
        },
    },
    "shift-scaling": {
        "grid": {"dim": 1, "n": 1024, "length": 40.0},
        "symbol": {"catalog": "heat"},
        "params": {
            "s": 0.0, "a": -1.0, "h_min": 1e-3, "h_max": 0.1, "n_h": 7,
            "lag_min": 1.0, "lag_max": 100.0, "n_lag": 7, "h_fixed": 1e-3,
            "slope_tol": 0.15, "residual_tol": 0.05,
        },
    },
    "timediff-scaling": {
        "grid": {"dim": 1, "n": 1024, "length": 40.0},
        "symbol": {"catalog": "heat"},
        "params": {
            "r": 0.0, "a": -1.0, "gap_min": 1e-3, "gap_max": 0.1, "n_gap": 7,
            "lag_min": 1.0, "lag_max": 100.0, "n_lag": 7, "gap_fixed": 1e-3,
            "slope_tol": 0.15, "residual_tol": 0.05,
        },
    },
    "bmo-certify": {
        "grid": {"dim": 1, "n": 512, "length": 20.0},
        "time": {"start": 0.0, "stop": 6.0, "steps": 300},
        "symbol": {"catalog": "fractional-1.5"},
        "corpus": {"generator": "gaussian-bumps", "count": 50},
        "params": {"factor": 1.25, "draws": 20, "draw_nu": 0.7, "draw_gamma": 1.5,
                   "spread_factor": 1.5},
    },
    "lp-certify": {
        "grid": {"dim": 1, "n": 256, "length": 20.0},
        "time": {"start": 0.0, "stop": 4.0, "steps": 400},
        "symbol": {"family": "fractional", "gamma": 1.5, "nu": 0.5},
        "corpus": {"generator": "gaussian-bumps", "count": 50},
        "params": {"p_list": [2.0, 4.0 / 3.0, 4.0], "l2_slack": 1.05, "duality_factor": 2.0},
    },
    "interpolation-demo": {
        "grid": {"dim": 1, "n": 256, "length": 20.0},
        "time": {"start": 0.0, "stop": 4.0, "steps": 400},
        "symbol": {"family": "fractional", "gamma": 1.5, "nu": 0.5},
        "corpus": {"generator": "gaussian-bumps", "count": 1},
        "params": {"p": 4.0, "lambdas": [0.05, 0.1, 0.2, 0.4, 0.8, 1.6], "layer_tol": 0.10},
    },
    "kernel-oracle": {
        "grid": {"dim": 1, "n": 1024, "length": 40.0},
        "symbol": {"catalog": "heat"},
        "params": {"duration": 1.0, "sweep_min": 1e-3, "sweep_max": 1e3, "n_sweep": 7,
                   "delta": 0.25},
    },
    "duality-check": {
        "grid": {"dim": 1, "n": 128, "length": 20.0},
        "time": {"start": -3.0, "stop": 3.0, "steps": 4800},
        "symbol": {"family": "fractional", "gamma": 1.5, "nu": 0.8, "coefficient": _ROUGH},
        "params": {"pairs": 10, "tol": 1e-8},
    },
    "scaling-identity": {
        "grid": {"dim": 1, "n": 1024, "length": 40.0},
        "symbol": {"catalog": "heat"},
        "params": {"gammas": [0.8, 1.0, 1.5, 2.0], "durations": [0.01, 0.5, 3.0, 100.0],
                   "start": 0.3, "coefficient": _ROUGH, "tol": 1e-8},
    },
}

TOP_KEYS = {"schema_version", "experiment", "seed", "workers", "symbol", "grid", "time",
            "corpus", "params"}
GRID_KEYS = {"dim", "n", "length"}
TIME_KEYS = {"start", "stop", "steps"}
CORPUS_KEYS = {"generator", "count", "space_extent", "width_range", "max_terms"}
SYMBOL_KEYS = {
    "catalog": {"catalog", "nu", "dim"},
    "second-order": {"family", "matrix", "nu", "name"},
    "polyharmonic": {"family", "m", "coefficient", "nu", "name"},
    "fractional": {"family", "gamma", "coefficient", "nu", "name"},
    "levy": {"family", "k", "gamma", "density", "density_params", "c1", "c2",
             "quadrature_nodes", "nu", "name"},
    "composition": {"family", "a", "b", "first", "second", "nu", "name"},
}


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key
        self.message = message


def _check_keys(table: dict, allowed: set, prefix: str):
    if not isinstance(table, dict):
        raise ConfigError(prefix, "expected a table")
    for k in table:
        if k not in allowed:
            raise ConfigError(f"{prefix}.{k}" if prefix else k, "unknown key")


def _number(table: dict, key: str, prefix: str, kind=float, positive=False):
    v = table[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{prefix}.{key}", f"expected a number, got {v!r}")
    if kind is int and int(v) != v:
        raise ConfigError(f"{prefix}.{key}", "expected an integer")
    if positive and not v > 0:
        raise ConfigError(f"{prefix}.{key}", "must be positive")
    return kind(v)


def _complex(v, key: str) -> complex:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v):
        return complex(v[0], v[1])
    raise ConfigError(key, "complex values are a number or [re, im]")


def parse_coefficient(v, key: str) -> RoughCoefficient | complex:
    if isinstance(v, dict):
        _check_keys(v, {"breakpoints", "values"}, key)
        try:
            bps = tuple(float(b) for b in v.get("breakpoints", []))
            vals = tuple(_complex(x, f"{key}.values") for x in v["values"])
            return RoughCoefficient(bps, vals)
        except KeyError:
            raise ConfigError(f"{key}.values", "missing") from None
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(key, str(exc)) from None
    return _complex(v, key)


def build_symbol(table: dict, dim: int, prefix: str = "symbol") -> Symbol:
    if "catalog" in table:
        _check_keys(table, SYMBOL_KEYS["catalog"], prefix)
        return catalog_symbol(table["catalog"], dim, table.get("nu"), prefix)
    fam = table.get("family")
    if fam not in SYMBOL_KEYS or fam == "catalog":
        raise ConfigError(f"{prefix}.family", f"unknown family {fam!r}")
    _check_keys(table, SYMBOL_KEYS[fam], prefix)
    try:
        nu = _number(table, "nu", prefix, positive=True)
    except KeyError:
        raise ConfigError(f"{prefix}.nu", "missing") from None
    name = table.get("name", "")
    try:
        if fam == "second-order":
            return second_order(np.asarray(table["matrix"], dtype=float), nu, name)
        if fam == "polyharmonic":
            coef = parse_coefficient(table.get("coefficient", 1.0), f"{prefix}.coefficient")
            return polyharmonic(int(table["m"]), coef, nu, dim)
        if fam == "fractional":
            coef = parse_coefficient(table.get("coefficient", 1.0), f"{prefix}.coefficient")
            return fractional(_number(table, "gamma", prefix, positive=True), coef,
                              nu=nu, dim=dim, name=name)
        if fam == "levy":
            dens = density(table.get("density", "uniform"), **table.get("density_params", {}))
            spec = LevySpec(
                int(table.get("k", 0)), float(table["gamma"]), dens,
                float(table.get("c1", 1.0)), float(table.get("c2", 1.0)),
                int(table.get("quadrature_nodes", 256)),
            )
            return levy(spec, nu, dim, name)
        first = build_symbol(table["first"], dim, f"{prefix}.first")
        second = build_symbol(table["second"], dim, f"{prefix}.second")
        return compose(float(table["a"]), float(table["b"]), first, second, nu, name)
    except KeyError as exc:
        raise ConfigError(f"{prefix}.{exc.args[0]}", "missing") from None
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(prefix, str(exc)) from None


def catalog_symbol(name: str, dim: int, nu=None, prefix: str = "symbol") -> Symbol:
    """Catalog entry; ``nu`` rescales model symbols (psi = -nu|xi|^gamma), else redeclares nu."""
    if nu is not None and not (isinstance(nu, (int, float)) and nu > 0):
        raise ConfigError(f"{prefix}.nu", "must be a positive number")
    if name == "heat" and nu is not None:
        return heat(float(nu), dim)
    if name.startswith("fractional-") and nu is not None:
        try:
            return model_symbol(float(nu), float(name.split("-", 1)[1]), dim)
        except ValueError:
            pass
    cat = catalog(dim)
    if name not in cat:
        raise ConfigError(f"{prefix}.catalog", f"unknown catalog symbol {name!r}; "
                                                f"choose from {sorted(cat)}")
    sym = cat[name]
    return sym if nu is None else replace(sym, nu=float(nu))


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int = 0
    workers: int = 1
    symbol: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    time: dict = field(default_factory=dict)
    corpus: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema_version": CONFIG_SCHEMA_VERSION,
            "experiment": self.experiment,
            "seed": self.seed,
            "workers": self.workers,
            "symbol": self.symbol,
            "grid": self.grid,
            "time": self.time,
            "corpus": self.corpus,
            "params": self.params,
        }

    def make_grid(self) -> SpectralGrid:
        g = self.grid
        try:
            return SpectralGrid(int(g["dim"]), int(g["n"]), float(g["length"]))
        except ValueError as exc:
            raise ConfigError("grid", str(exc)) from None

    def make_symbol(self) -> Symbol:
        return build_symbol(self.symbol, int(self.grid["dim"]))

    def make_times(self) -> np.ndarray:
        t = self.time
        if not t:
            raise ConfigError("time", f"experiment {self.experiment} needs a time grid")
        if not t["stop"] > t["start"]:
            raise ConfigError("time.stop", "must exceed time.start")
        return np.linspace(float(t["start"]), float(t["stop"]), int(t["steps"]) + 1)

    def make_corpus(self, normalization="linf", **overrides) -> Corpus:
        c = {**self.corpus, **overrides}
        t = self.time
        kw = {k: v for k, v in c.items() if k in ("space_extent", "max_terms")}
        if "width_range" in c:
            kw["width_range"] = tuple(c["width_range"])
        kw.setdefault("space_extent", float(self.grid["length"]) / 8)
        return Corpus(
            seed=self.seed, count=int(c.get("count", 50)),
            generator=c.get("generator", "gaussian-bumps"), normalization=normalization,
            dim=int(self.grid["dim"]), time_window=(float(t["start"]), float(t["stop"])), **kw,
        )


def _merge(defaults: dict, given: dict, prefix: str) -> dict:
    _check_keys(given, set(defaults), prefix)
    return {**defaults, **given}


def parse_config(raw: dict, experiment: str | None = None) -> ExperimentConfig:
    _check_keys(raw, TOP_KEYS, "")
    version = raw.get("schema_version", CONFIG_SCHEMA_VERSION)
    if version != CONFIG_SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported version {version!r}")
    exp = raw.get("experiment", experiment)
    if experiment is not None and exp != experiment:
        raise ConfigError("experiment", f"config is for {exp!r}, command asked for {experiment!r}")
    if exp not in EXPERIMENTS:
        raise ConfigError("experiment", f"unknown experiment {exp!r}; choose from {EXPERIMENTS}")
    d = DEFAULTS[exp]
    grid = _merge(d["grid"], raw.get("grid", {}), "grid")
    for k in GRID_KEYS:
        _number(grid, k, "grid", int if k != "length" else float, positive=True)
    time = {}
    if "time" in d or "time" in raw:
        time = {**d.get("time", {}), **raw.get("time", {})}
        _check_keys(time, TIME_KEYS, "time")
        for k in TIME_KEYS:
            if k not in time:
                raise ConfigError(f"time.{k}", "missing")
            _number(time, k, "time", int if k == "steps" else float, positive=(k == "steps"))
    corpus = {}
    if "corpus" in d or "corpus" in raw:
        corpus = {**d.get("corpus", {}), **raw.get("corpus", {})}
        _check_keys(corpus, CORPUS_KEYS, "corpus")
        if corpus.get("generator", "gaussian-bumps") not in GENERATORS:
            raise ConfigError("corpus.generator", f"choose from {GENERATORS}")
        if "count" in corpus:
            _number(corpus, "count", "corpus", int)
    params = _merge(d["params"], raw.get("params", {}), "params")
    for k, v in params.items():
        dv = d["params"][k]
        if isinstance(dv, (int, float)) and not isinstance(dv, bool):
            _number(params, k, "params")
            if isinstance(v, float) and not math.isfinite(v):
                raise ConfigError(f"params.{k}", "must be finite")
    symbol = raw.get("symbol", d["symbol"])
    seed = raw.get("seed", 0)
    workers = raw.get("workers", 1)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed", "must be a nonnegative integer")
    if isinstance(workers, bool) or not isinstance(workers, int) or workers < 1:
        raise ConfigError("workers", "must be a positive integer")
    cfg = ExperimentConfig(exp, seed, workers, symbol, grid, time, corpus, params)
    cfg.make_grid()
    cfg.make_symbol()
    return cfg


def load_config(path, experiment: str | None = None) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = tomli.loads(path.read_text())
    except tomli.TOMLDecodeError as exc:
        raise ConfigError("<file>", f"TOML parse error: {exc}") from None
    except OSError as exc:
        raise ConfigError("<file>", str(exc)) from None
    return parse_config(raw, experiment)
