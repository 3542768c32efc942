"""Report persistence: versioned JSON, CSV tables, native SVG log-log plots, baselines."""
from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import json
import math
import os
from pathlib import Path

import numpy as np

REPORT_SCHEMA_VERSION = 1
BASELINE_SCHEMA_VERSION = 1
BASELINE_ENV = "PARABMO_BASELINE_DIR"
BASELINE_FILE = "baselines.json"


def _plain(obj):
    """JSON-safe copy: numpy scalars/arrays to python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def config_hash(config: dict) -> str:
    blob = json.dumps(_plain(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def report_document(report: dict, config: dict, timestamp: str | None = None) -> dict:
    doc = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "timestamp": timestamp or _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "config": config,
        **report,
        "config_hash": config_hash(config),
    }
    return _plain(doc)


def write_json(doc: dict, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def read_report(path) -> dict:
    doc = json.loads(Path(path).read_text())
    if "schema_version" not in doc:
        raise ValueError(f"{path}: not a report (no schema_version)")
    return doc


def write_table(rows: list[dict], path) -> Path:
    path = Path(path)
    keys: list[str] = []
    for r in rows:
        keys += [k for k in r if k not in keys]
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys)
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return path


def fit_rows(fit: dict) -> list[dict]:
    return [
        {"label": fit["label"], "abscissa": x, "value": y,
         "envelope": fit["prefactor"] * x ** fit["exponent"]}
        for x, y in zip(fit["abscissa"], fit["values"])
    ]


# ---------------------------------------------------------------------------
# SVG


def svg_loglog(fit: dict, title: str = "", width: int = 480, height: int = 360) -> str:
    """Scatter of the samples with the fitted power law overlaid, log-log axes."""
    x = np.log10(np.asarray(fit["abscissa"], dtype=float))
    y = np.log10(np.asarray(fit["values"], dtype=float))
    yfit = math.log10(fit["prefactor"]) + fit["exponent"] * x
    ml, mr, mt, mb = 60, 20, 30, 45
    x0, x1 = float(x.min()), float(x.max())
    lo, hi = float(min(y.min(), yfit.min())), float(max(y.max(), yfit.max()))
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    if x1 - x0 < 1e-12:
        x0, x1 = x0 - 0.5, x1 + 0.5

    def px(v):
        return ml + (v - x0) / (x1 - x0) * (width - ml - mr)

    def py(v):
        return height - mb - (v - lo) / (hi - lo) * (height - mt - mb)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{ml}" y1="{height - mb}" x2="{width - mr}" y2="{height - mb}" stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{height - mb}" stroke="black"/>',
    ]
    for d in range(math.ceil(x0), math.floor(x1) + 1):
        parts.append(f'<text x="{px(d):.1f}" y="{height - mb + 15}" text-anchor="middle">1e{d}</text>')
    for d in range(math.ceil(lo), math.floor(hi) + 1):
        parts.append(f'<text x="{ml - 5}" y="{py(d) + 4:.1f}" text-anchor="end">1e{d}</text>')
    pts = " ".join(f"{px(a):.1f},{py(b):.1f}" for a, b in zip(x, yfit))
    parts.append(f'<polyline points="{pts}" fill="none" stroke="#c0392b" stroke-width="1.5"/>')
    for a, b in zip(x, y):
        parts.append(f'<circle cx="{px(a):.1f}" cy="{py(b):.1f}" r="3" fill="#2c3e50"/>')
    label = (f'{title or fit["label"]}: slope {fit["exponent"]:.3f} '
             f'(target {fit["target"]:.3f}), rms {fit["residual"]:.2g}')
    parts.append(f'<text x="{ml}" y="18">{_escape(label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


# ---------------------------------------------------------------------------
# baselines


def baseline_dir(default: Path | None = None) -> Path:
    env = os.environ.get(BASELINE_ENV)
    if env:
        return Path(env)
    return default or Path(__file__).resolve().parents[2] / "baselines"


class BaselineStore:
    """Pinned values for the derived checks, keyed by experiment and quantity.

    ``scope`` (normally the config hash) keeps values pinned for one
    configuration from being checked against another.  ``check`` compares against a pinned value; pinning happens only with
    ``update=True``.  Missing entries are reported as unpinned, not failed.
    """

    def __init__(self, directory: Path | None = None, update: bool = False, scope: str = ""):
        self.scope = scope
        self.path = baseline_dir(directory) / BASELINE_FILE
        self.update = update
        self.data = {"schema_version": BASELINE_SCHEMA_VERSION, "entries": {}}
        if self.path.exists():
            loaded = json.loads(self.path.read_text())
            if loaded.get("schema_version") != BASELINE_SCHEMA_VERSION:
                raise ValueError(f"baseline schema {loaded.get('schema_version')} unsupported")
            self.data = loaded
        self.dirty = False

    @property
    def entries(self) -> dict:
        return self.data["entries"]

    def check(self, key: str, value: float, rel_tol: float) -> dict:
        if self.scope:
            key = f"{self.scope}/{key}"
        pinned = self.entries.get(key)
        if self.update:
            self.entries[key] = {"value": float(value), "rel_tol": rel_tol}
            self.dirty = True
            return {"key": key, "status": "pinned", "value": float(value)}
        if pinned is None:
            return {"key": key, "status": "unpinned", "value": float(value)}
        ref = pinned["value"]
        rel = abs(value - ref) / max(abs(ref), 1e-300)
        ok = rel <= pinned.get("rel_tol", rel_tol)
        return {"key": key, "status": "match" if ok else "drift", "value": float(value),
                "baseline": ref, "relative_change": rel}

    def save(self):
        if not self.dirty:
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text(json.dumps(self.data, indent=2, sort_keys=True) + "\n")
        self.dirty = False
