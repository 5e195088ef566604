#!/usr/bin/env python3
"""Regenerate the plotting golden fixtures under plots/tests/goldens/.

For each of the three experiment settings this script runs a small seeded
simulation through the CLI (300 runs at 2,000 steps), leaving samples.csv and
report.json in the golden directory, then bins the samples with the library's
histogram2d at bins=60 and writes the count grid as grid.csv plus a
grid_meta.json side file.

The extent rule (99.5th percentile of the sample radii) and the grid CSV
format (one comma-joined line of integer counts per x0-bin) are the contract
the plotting package must reproduce byte for byte.
"""

import json
import sys
from pathlib import Path

import numpy as np

from orderopt.cli import main as cli_main
from orderopt.experiments import SampleKind, histogram2d, read_samples_csv

ROOT = Path(__file__).resolve().parent.parent
GOLDEN_ROOT = ROOT / "plots" / "tests" / "goldens"
BINS = 60
SMOKE_RUNS = 300
SMOKE_STEPS = 2000

BASE_PROBLEM = {
    "hessian": [[1.0, 0.0], [0.0, 3.0]],
    "linear": [0.0, 0.0],
    "constant": 0.0,
}
SETTINGS = {
    1: {"eta": 5.0, "seed": 9101},
    2: {"eta": "optimal", "seed": 9102},
    3: {"eta": "optimal", "seed": 9103},
}
SETTING_KIND = {1: SampleKind.SCALED_LAST, 2: SampleKind.SCALED_LAST, 3: SampleKind.SCALED_AVG}


def auto_extent(rows):
    """99.5th percentile of sample radii; the plotting package mirrors this."""
    ext = float(np.percentile(np.hypot(rows[:, 0], rows[:, 1]), 99.5))
    if not np.isfinite(ext) or ext <= 0.0:
        ext = 1.0
    return ext


def grid_csv_text(counts):
    return "".join(",".join(str(int(v)) for v in row) + "\n" for row in counts)


def make_setting(setting, params):
    out_dir = GOLDEN_ROOT / f"setting{setting}"
    out_dir.mkdir(parents=True, exist_ok=True)
    config = {
        "problem": BASE_PROBLEM,
        "noise": {"kind": "sphere", "radius": 1.0},
        "setting": setting,
        "eta": params["eta"],
        "steps": SMOKE_STEPS,
        "n_runs": SMOKE_RUNS,
        "seed": params["seed"],
    }
    config_path = out_dir / "config.json"
    config_path.write_text(json.dumps(config, indent=2, sort_keys=True) + "\n")
    code = cli_main(["simulate", "--config", str(config_path), "--out", str(out_dir)])
    if code != 0:
        raise SystemExit(f"simulate failed for setting {setting} with exit code {code}")

    samples = read_samples_csv(out_dir / "samples.csv", SETTING_KIND[setting])
    extent = auto_extent(samples.rows)
    hist = histogram2d(samples, BINS, extent)
    (out_dir / "grid.csv").write_text(grid_csv_text(hist.counts))
    meta = {
        "bins": hist.bins,
        "extent": hist.extent,
        "overflow": hist.overflow,
        "total_runs": samples.n_runs,
        "source": "samples.csv",
    }
    (out_dir / "grid_meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(f"setting {setting}: extent {extent:.6g}, overflow {hist.overflow}", flush=True)


def main():
    for setting, params in SETTINGS.items():
        make_setting(setting, params)
    print(f"goldens written under {GOLDEN_ROOT}", flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
