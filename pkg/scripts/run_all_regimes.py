#!/usr/bin/env python3
"""Run classify + verify over every bundled config and print a summary table.

Usage: python scripts/run_all_regimes.py [--out DIR] [--workers N]

Each config gets its own subdirectory under the output root with the
usual manifest/report/CSV trio; the table at the end shows the regime,
the final KS distance and the pass/fail verdict per config.
"""

import argparse
import json
import sys
import time
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from perpsim.cli import main as cli_main  # noqa: E402

CONFIGS = [
    "case1_sym.json",
    "case1_asym.json",
    "case2_abs.json",
    "case3_clt.json",
    "case3_evt.json",
    "case4.json",
    "oracle_fair_sign.json",
]


def run(args=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/all_regimes")
    parser.add_argument("--workers", type=int, default=1)
    opts = parser.parse_args(args)

    rows = []
    worst = 0
    for name in CONFIGS:
        config = REPO / "configs" / name
        out = Path(opts.out) / config.stem
        command = "oracle" if name.startswith("oracle") else "verify"
        start = time.perf_counter()
        code = cli_main(
            [
                command,
                "--config",
                str(config),
                "--out",
                str(out),
                "--workers",
                str(opts.workers),
                "--quiet",
            ]
        )
        elapsed = time.perf_counter() - start
        report = json.loads((out / "report.json").read_text())
        if command == "verify":
            case = report["regime"]["case"]
            ks = report["final_ks"]
            verdict = "pass" if report["passed"] else "FAIL"
        else:
            case = "oracle"
            ks = max(r["deviation"] for r in report["checkpoints"])
            verdict = "pass" if report["passed"] else "FAIL"
        rows.append((config.stem, case, ks, verdict, elapsed))
        worst = max(worst, code)

    print(f"\n{'config':<20} {'case':<10} {'final ks':>10} {'verdict':>8} {'sec':>8}")
    for name, case, ks, verdict, elapsed in rows:
        print(f"{name:<20} {case:<10} {ks:>10.5f} {verdict:>8} {elapsed:>8.1f}")
    return worst


if __name__ == "__main__":
    sys.exit(run())
