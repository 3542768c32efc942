"""Command line: ``parabmo run <experiment>`` and ``parabmo compare a.json b.json``.

Exit codes: 0 pass, 2 fail verdict (or compare mismatch), 1 execution error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import traceback
from pathlib import Path

import numpy as np

from . import verify
from .config import EXPERIMENTS, ConfigError, ExperimentConfig, parse_config
from .kernels import AliasingRisk
from .report import (
    BaselineStore,
    config_hash,
    fit_rows,
    read_report,
    report_document,
    svg_loglog,
    write_json,
    write_table,
)
from .seminorms import EmptySweep
from .symbols import RoughCoefficient, SymbolError, fractional

EXIT_PASS, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


def _logspace(lo, hi, n):
    return np.logspace(math.log10(lo), math.log10(hi), int(n))


# ---------------------------------------------------------------------------
# experiment runners: (config) -> (report, tables, baseline checks)


def _run_a1(cfg: ExperimentConfig, store: BaselineStore):
    p = cfg.params
    sym, grid = cfg.make_symbol(), cfg.make_grid()
    rep = verify.check_assumption1(
        sym, grid, _logspace(p["duration_min"], p["duration_max"], p["n_durations"]), tol=p["tol"]
    )
    rows = [{"quantity": k, "value": v} for k, v in rep.measurements.items()
            if isinstance(v, (int, float))]
    # the margin itself is rounding-level for exact symbols; pin the stable integral
    checks = [store.check(f"a1-check/{sym.name or 'symbol'}/int_H_mean",
                          rep.measurements["int_H_mean"], 1e-9)]
    return rep, {"a1": rows}, checks


def _scaling_tables(res):
    tables = {}
    for f in res.fits:
        tables[f.label.replace(" ", "_").replace("-", "")] = fit_rows(f.to_dict())
    return tables


def _run_tail(cfg, store):
    p = cfg.params
    sym, grid = cfg.make_symbol(), cfg.make_grid()
    c_min = p["c_min"] or 4 * grid.spacing
    res = verify.check_tail_mass(
        sym, grid, p["r"], p["s"], _logspace(c_min, p["c_max"], p["n_c"]),
        _logspace(p["duration_min"], p["duration_max"], p["n_durations"]), p["c_fixed"],
        p["epsilon"] or None, p["slope_tol"], p["residual_tol"], cfg.workers,
    )
    return res.to_report(sym, grid), _scaling_tables(res), []


def _run_shift(cfg, store):
    p = cfg.params
    sym, grid = cfg.make_symbol(), cfg.make_grid()
    res = verify.check_shift_difference(
        sym, grid, p["s"], p["a"], _logspace(p["h_min"], p["h_max"], p["n_h"]),
        _logspace(p["lag_min"], p["lag_max"], p["n_lag"]), p["h_fixed"],
        p["slope_tol"], p["residual_tol"], cfg.workers,
    )
    return res.to_report(sym, grid), _scaling_tables(res), []


def _run_timediff(cfg, store):
    p = cfg.params
    sym, grid = cfg.make_symbol(), cfg.make_grid()
    res = verify.check_time_difference(
        sym, grid, p["r"], p["a"], _logspace(p["gap_min"], p["gap_max"], p["n_gap"]),
        _logspace(p["lag_min"], p["lag_max"], p["n_lag"]), p["gap_fixed"],
        p["slope_tol"], p["residual_tol"], cfg.workers,
    )
    return res.to_report(sym, grid), _scaling_tables(res), []


def _run_bmo(cfg, store):
    p = cfg.params
    sym, grid, times = cfg.make_symbol(), cfg.make_grid(), cfg.make_times()
    corpus = cfg.make_corpus("linf")
    rep = verify.certify_bmo_estimate(sym, corpus, grid, times, factor=p["factor"],
                                      workers=cfg.workers)
    rows = [{"member": i, "ratio": r, "ratio_refined": rr}
            for i, (r, rr) in enumerate(zip(rep.ratios, rep.measurements["refined_ratios"]))]
    tables = {"members": rows}
    checks = [store.check("bmo-certify/empirical_N", rep.measurements["empirical_N"], 1e-9)]
    if int(p["draws"]) > 0:
        rough = verify.roughness_spread(
            p["draw_gamma"], p["draw_nu"], corpus, grid, times, int(p["draws"]), cfg.seed,
            p["spread_factor"], workers=cfg.workers,
        )
        rep.measurements["roughness"] = rough.to_dict()
        rep.tolerance["spread_factor"] = p["spread_factor"]
        rep.passed = rep.passed and rough.passed
        tables["draws"] = [{"draw": i, "empirical_N": v} for i, v in enumerate(rough.ratios)]
        checks.append(store.check("bmo-certify/roughness_spread",
                                  rough.measurements["spread"], 1e-9))
    return rep, tables, checks


def _run_lp(cfg, store):
    p = cfg.params
    sym, grid, times = cfg.make_symbol(), cfg.make_grid(), cfg.make_times()
    rep = verify.certify_lp_estimate(sym, cfg.make_corpus("linf"), grid, times,
                                     [float(v) for v in p["p_list"]], p["l2_slack"],
                                     p["duality_factor"], cfg.workers)
    rows = [{"p": k, "member": i, "ratio": v}
            for k, vals in rep.measurements["ratios_by_p"].items() for i, v in enumerate(vals)]
    checks = [store.check(f"lp-certify/empirical_N/p={k}", v, 1e-9)
              for k, v in rep.measurements["empirical_N"].items()]
    return rep, {"ratios": rows}, checks


def _run_interp(cfg, store):
    p = cfg.params
    sym, grid, times = cfg.make_symbol(), cfg.make_grid(), cfg.make_times()
    f = cfg.make_corpus("linf").realize(grid, times)[0]
    rep = verify.interpolation_demo(sym, f, [float(v) for v in p["lambdas"]], p["p"],
                                    layer_tol=p["layer_tol"])
    return rep, {"rows": rep.measurements["rows"]}, []


def _run_kernel(cfg, store):
    p = cfg.params
    grid = cfg.make_grid()
    sym = cfg.make_symbol()
    rep = verify.kernel_oracle(grid if grid.dim == 1 else None, p["duration"])
    sweep = _logspace(p["sweep_min"], p["sweep_max"], p["n_sweep"])
    bounds = verify.kernel_bounds(sym, grid, sweep, p["delta"])
    rep.measurements["bounds"] = bounds
    rows = [{"duration": d, "q2_sup": q, "moment": m}
            for d, q, m in zip(bounds["durations"], bounds["q2_sup"], bounds["moment"])]
    checks = [
        store.check(f"kernel-oracle/{sym.name}/q2_sup_max", bounds["q2_sup_max"], 1e-9),
        store.check(f"kernel-oracle/{sym.name}/moment_max", bounds["moment_max"], 1e-9),
    ]
    return rep, {"bounds": rows}, checks


def _run_duality(cfg, store):
    p = cfg.params
    sym, grid, times = cfg.make_symbol(), cfg.make_grid(), cfg.make_times()
    rep = verify.duality_check(sym, grid, times, int(p["pairs"]), cfg.seed, p["tol"], cfg.workers)
    rows = [{"pair": i, "relative": r} for i, r in enumerate(rep.ratios)]
    return rep, {"pairs": rows}, []


def _run_scaling_identity(cfg, store):
    from .config import parse_coefficient

    p = cfg.params
    grid = cfg.make_grid()
    coef = parse_coefficient(p["coefficient"], "params.coefficient")
    rows = []
    for g in p["gammas"]:
        nu = coef.real_bounds()[0] if isinstance(coef, RoughCoefficient) else coef.real
        sym = fractional(float(g), coef, nu=nu, dim=grid.dim, name=f"rough-{g}")
        for d in p["durations"]:
            err = verify.scaling_identity(sym, p["start"], p["start"] + d, grid)
            rows.append({"gamma": float(g), "duration": float(d), "relative_sup_error": err})
    worst = max(r["relative_sup_error"] for r in rows)
    rep = verify.EstimateReport(
        experiment="scaling-identity",
        symbol={"family": "fractional", "coefficient": p["coefficient"], "gammas": p["gammas"]},
        grid=grid.describe(),
        passed=worst <= p["tol"],
        tolerance={"relative_sup": p["tol"]},
        ratios=[r["relative_sup_error"] for r in rows],
        measurements={"worst": worst},
    )
    return rep, {"identity": rows}, []


RUNNERS = {
    "a1-check": _run_a1,
    "tail-scaling": _run_tail,
    "shift-scaling": _run_shift,
    "timediff-scaling": _run_timediff,
    "bmo-certify": _run_bmo,
    "lp-certify": _run_lp,
    "interpolation-demo": _run_interp,
    "kernel-oracle": _run_kernel,
    "duality-check": _run_duality,
    "scaling-identity": _run_scaling_identity,
}


def execute(cfg: ExperimentConfig, out_dir: Path, update_baselines: bool = False,
            timestamp: str | None = None) -> int:
    """Run, write report.json + CSV + SVG into ``out_dir``, return the exit code."""
    out_dir.mkdir(parents=True, exist_ok=True)
    # workers never change a result, so they do not select a baseline
    scope = config_hash({k: v for k, v in cfg.to_dict().items() if k != "workers"})
    store = BaselineStore(update=update_baselines, scope=scope)
    rep, tables, checks = RUNNERS[cfg.experiment](cfg, store)
    if update_baselines:
        store.save()
    drift = [c for c in checks if c["status"] == "drift"]
    body = rep.to_dict()
    body["baselines"] = checks
    if drift:
        body["verdict"] = "fail"
        body["notes"] = body["notes"] + [f"baseline drift: {[c['key'] for c in drift]}"]
    doc = report_document(body, cfg.to_dict(), timestamp)
    write_json(doc, out_dir / "report.json")
    for name, rows in tables.items():
        if rows:
            write_table(rows, out_dir / f"{name}.csv")
    for i, f in enumerate(doc.get("fits", [])):
        (out_dir / f"fit_{i}.svg").write_text(svg_loglog(f))
    return EXIT_PASS if doc["verdict"] == "pass" else EXIT_FAIL


def _error(out_dir: Path | None, kind: str, message: str, key: str | None = None) -> int:
    doc = {"error": kind, "message": message}
    if key is not None:
        doc["key"] = key
    text = json.dumps(doc, indent=2, sort_keys=True)
    print(text, file=sys.stderr)
    if out_dir is not None:
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
            (out_dir / "error.json").write_text(text + "\n")
        except OSError:
            pass
    return EXIT_ERROR


def _overrides(args) -> dict:
    raw: dict = {}
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.workers is not None:
        raw["workers"] = args.workers
    if args.grid_n is not None:
        raw.setdefault("grid", {})["n"] = args.grid_n
    if args.grid_l is not None:
        raw.setdefault("grid", {})["length"] = args.grid_l
    if args.symbol is not None:
        raw["symbol"] = {"catalog": args.symbol}
    if args.nu is not None:
        raw.setdefault("symbol", {})
        raw["symbol"]["nu"] = args.nu
    return raw


def cmd_run(args) -> int:
    out_dir = Path(args.out)
    try:
        if args.config:
            import tomli

            try:
                raw = tomli.loads(Path(args.config).read_text())
            except (OSError, tomli.TOMLDecodeError) as exc:
                raise ConfigError("<file>", str(exc)) from None
        else:
            raw = {}
        over = _overrides(args)
        for k, v in over.items():
            if isinstance(v, dict) and isinstance(raw.get(k), dict):
                if k == "symbol" and "catalog" in v:
                    raw[k] = v
                else:
                    raw[k] = {**raw[k], **v}
            else:
                raw[k] = v
        cfg = parse_config(raw, args.experiment)
    except ConfigError as exc:
        return _error(out_dir, "config", exc.message, exc.key)
    try:
        code = execute(cfg, out_dir, args.update_baselines)
    except AliasingRisk as exc:
        return _error(out_dir, "aliasing-risk", str(exc))
    except EmptySweep as exc:
        return _error(out_dir, "empty-sweep", str(exc))
    except ConfigError as exc:
        return _error(out_dir, "config", exc.message, exc.key)
    except (SymbolError, ValueError) as exc:
        return _error(out_dir, "invalid-input", str(exc))
    except Exception as exc:  # every path must map to an exit code
        return _error(out_dir, "internal", f"{type(exc).__name__}: {exc}\n{traceback.format_exc()}")
    print(f"{cfg.experiment}: {'pass' if code == 0 else 'fail'} -> {out_dir / 'report.json'}")
    return code


def _constants(doc: dict) -> dict[str, float]:
    """Empirical constants and fitted exponents, flattened."""
    out = {}

    def walk(prefix, obj):
        if isinstance(obj, dict):
            for k, v in obj.items():
                walk(f"{prefix}.{k}" if prefix else k, v)
        elif isinstance(obj, (int, float)) and not isinstance(obj, bool):
            leaf = prefix.split(".")[-1] if "." in prefix else prefix
            if "empirical" in prefix or leaf in ("l2_max_ratio", "worst", "spread"):
                out[prefix] = float(obj)

    walk("", doc.get("measurements", {}))
    for i, f in enumerate(doc.get("fits", [])):
        out[f"fit[{f.get('label', i)}].exponent"] = float(f["exponent"])
    return out


def compare_runs(a: dict, b: dict, factor: float = 1.25, slope_tol: float = 0.05) -> tuple[int, list]:
    if a.get("schema_version") != b.get("schema_version"):
        raise ValueError("schema versions differ")
    if a.get("experiment") != b.get("experiment"):
        raise ValueError("reports are for different experiments")
    diffs = []
    if a.get("symbol") != b.get("symbol"):
        diffs.append({"key": "symbol", "a": a.get("symbol"), "b": b.get("symbol")})
    ca, cb = _constants(a), _constants(b)
    for key in sorted(set(ca) | set(cb)):
        if key not in ca or key not in cb:
            diffs.append({"key": key, "a": ca.get(key), "b": cb.get(key), "reason": "missing"})
            continue
        x, y = ca[key], cb[key]
        if key.endswith(".exponent"):
            bad = abs(x - y) > slope_tol
        elif x == y:
            bad = False
        elif x <= 0 or y <= 0:
            bad = abs(x - y) > 1e-12
        else:
            bad = max(x, y) / min(x, y) > factor
        if bad:
            diffs.append({"key": key, "a": x, "b": y})
    return (EXIT_FAIL if diffs else EXIT_PASS), diffs


def cmd_compare(args) -> int:
    try:
        a, b = read_report(args.report_a), read_report(args.report_b)
        code, diffs = compare_runs(a, b, args.factor, args.slope_tol)
    except (OSError, ValueError, KeyError) as exc:
        return _error(None, "compare", str(exc))
    print(json.dumps({"differences": diffs, "exit": code}, indent=2))
    return code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="parabmo", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one experiment")
    run.add_argument("experiment", choices=EXPERIMENTS)
    run.add_argument("--config", help="TOML experiment config")
    run.add_argument("--out", default="runs/latest", help="output directory")
    run.add_argument("--seed", type=int)
    run.add_argument("--workers", type=int)
    run.add_argument("--update-baselines", action="store_true")
    run.add_argument("--grid-n", type=int)
    run.add_argument("--grid-l", type=float)
    run.add_argument("--symbol", help="catalog symbol name")
    run.add_argument("--nu", type=float, help="ellipticity (rescales model symbols)")
    run.set_defaults(func=cmd_run)
    cmp_ = sub.add_parser("compare", help="diff two reports")
    cmp_.add_argument("report_a")
    cmp_.add_argument("report_b")
    cmp_.add_argument("--factor", type=float, default=1.25,
                      help="allowed ratio between empirical constants")
    cmp_.add_argument("--slope-tol", type=float, default=0.05,
                      help="allowed absolute change of fitted exponents")
    cmp_.set_defaults(func=cmd_compare)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PASS if exc.code == 0 else EXIT_ERROR
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
