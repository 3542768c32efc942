"""Run every experiment with its default config and print a verdict table.

    python scripts/run_all.py [--out runs] [--workers N] [--only a1-check tail-scaling ...]
"""
import argparse
import json
import sys
import time
from pathlib import Path

from parabmo.cli import main as cli_main
from parabmo.config import EXPERIMENTS

LABEL = {0: "pass", 1: "error", 2: "fail"}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--only", nargs="+", choices=EXPERIMENTS, default=list(EXPERIMENTS))
    args = ap.parse_args(argv)
    rows, worst = [], 0
    for exp in args.only:
        out = Path(args.out) / exp
        t0 = time.perf_counter()
        code = cli_main(["run", exp, "--out", str(out), "--workers", str(args.workers)])
        rows.append((exp, LABEL[code], time.perf_counter() - t0))
        worst = max(worst, code)
    print()
    for exp, verdict, dt in rows:
        print(f"{exp:20s} {verdict:6s} {dt:8.1f}s")
    (Path(args.out) / "summary.json").write_text(
        json.dumps([{"experiment": e, "verdict": v, "seconds": round(d, 2)} for e, v, d in rows],
                   indent=2) + "\n")
    return worst


if __name__ == "__main__":
    sys.exit(main())
