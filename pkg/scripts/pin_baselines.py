"""Re-pin the derived-value baselines (baselines/baselines.json).

Only run this after a deliberate numerical change; the diff of the JSON file
is the record of what moved.
"""
import sys
import tempfile

from parabmo.cli import main as cli_main

PINNED = ("a1-check", "kernel-oracle", "lp-certify", "bmo-certify")


def main() -> int:
    worst = 0
    with tempfile.TemporaryDirectory() as tmp:
        for exp in PINNED:
            code = cli_main(["run", exp, "--out", f"{tmp}/{exp}", "--update-baselines"])
            worst = max(worst, 1 if code == 1 else 0)
    return worst


if __name__ == "__main__":
    sys.exit(main())
