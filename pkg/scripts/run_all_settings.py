#!/usr/bin/env python3
"""Run the three reference experiment settings through the CLI and summarize.

Full scale (the committed configs: 10,000 runs at 10^6 steps) takes on the
order of an hour per setting on a single core; use --runs/--steps to smoke
test first, e.g.:

    python3 scripts/run_all_settings.py --runs 200 --steps 20000 --out-root /tmp/smoke
"""

import argparse
import json
import subprocess
import sys
from pathlib import Path

CONFIG_DIR = Path(__file__).resolve().parent / "configs"
SETTINGS = (1, 2, 3)


def run_setting(setting, args):
    config = CONFIG_DIR / f"setting{setting}.json"
    out_dir = Path(args.out_root) / f"setting{setting}"
    cmd = [
        sys.executable, "-m", "orderopt.cli", "simulate",
        "--config", str(config), "--out", str(out_dir),
    ]
    if args.runs is not None:
        cmd += ["--runs", str(args.runs)]
    if args.steps is not None:
        cmd += ["--steps", str(args.steps)]
    if args.threads is not None:
        cmd += ["--threads", str(args.threads)]
    print(f"running setting {setting}: {' '.join(cmd)}", flush=True)
    proc = subprocess.run(cmd)
    if proc.returncode != 0:
        raise SystemExit(f"setting {setting} failed with exit code {proc.returncode}")
    return json.loads((out_dir / "report.json").read_text())


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out-root", default="results", help="parent directory for per-setting outputs")
    parser.add_argument("--runs", type=int, default=None, help="override n_runs in every config")
    parser.add_argument("--steps", type=int, default=None, help="override steps in every config")
    parser.add_argument("--threads", type=int, default=None, help="worker processes per setting")
    args = parser.parse_args(argv)

    reports = {s: run_setting(s, args) for s in SETTINGS}

    print("\nsetting  kind         eta        rel_err  trace(emp)")
    traces = {}
    for s, rep in reports.items():
        emp = rep["empirical"]
        traces[s] = sum(emp[i][i] for i in range(len(emp)))
        print(
            f"{s:7d}  {rep['kind']:<11s}  {rep['eta']:<9.6g}  "
            f"{rep['frobenius_rel_err']:<7.3f}  {traces[s]:.4f}"
        )
    print(
        f"\nconcentration ordering: trace2 < trace1 is {traces[2] < traces[1]}, "
        f"trace3 < trace2 is {traces[3] < traces[2]}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
