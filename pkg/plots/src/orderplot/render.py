"""Heatmaps of 2-D scaled-deviation samples with covariance ellipse overlays.

Reads only the simulation harness's published artifacts: samples.csv
(header ``run_id,x0,x1``, one row per run) and report.json (the
``theoretical`` entry holds the 2x2 covariance to overlay).  The binned count
grid is written next to each image as ``<stem>_grid.csv`` together with a
``<stem>_meta.json`` side file recording bins, extent, and overflow, so the
plotted grid can be checked byte for byte against the harness's own binning.

Binning contract shared with the harness: edges are
``linspace(-extent, extent, bins + 1)`` per axis, counts come from numpy's
histogram2d (final bin closed on the right), and the auto extent is the 99.5th
percentile of the sample radii ``hypot(x0, x1)``.
"""

import csv
import json
import math
import re
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

RASTER_EXTENSIONS = (".png", ".jpg", ".jpeg", ".tif", ".tiff", ".bmp")
_HEADER_PATTERN = re.compile(r"^run_id(,x\d+)+$")

AUTO_RANGE = "auto"
_AUTO_PERCENTILE = 99.5
_ELLIPSE_SIGMAS = (1.0, 2.0)
_ELLIPSE_POINTS = 361


class PlotInputError(Exception):
    """Malformed CSV/JSON input or an invalid plot specification."""


class UnsupportedDimensionError(PlotInputError):
    """Samples are not 2-D; only planar histograms are supported."""


@dataclass(frozen=True)
class PlotSpec:
    """One figure request.

    range is either the string "auto" (extent from the 99.5th percentile
    radius) or a positive real half-width; the plotted window is always
    [-range, range] on both axes.
    """

    input_csv: Path
    output: Path
    report_json: Path | None = None
    bins: int = 60
    range: object = AUTO_RANGE
    title: str = ""

    def __post_init__(self):
        object.__setattr__(self, "input_csv", Path(self.input_csv))
        object.__setattr__(self, "output", Path(self.output))
        if self.report_json is not None:
            object.__setattr__(self, "report_json", Path(self.report_json))
        if not isinstance(self.bins, int) or isinstance(self.bins, bool):
            raise PlotInputError(f"bins must be an integer, got {self.bins!r}")
        if self.bins < 10:
            raise PlotInputError(f"bins must be at least 10, got {self.bins}")
        if isinstance(self.range, str):
            if self.range != AUTO_RANGE:
                raise PlotInputError(
                    f'range must be "{AUTO_RANGE}" or a positive real, got {self.range!r}'
                )
        else:
            value = float(self.range)
            if not math.isfinite(value) or value <= 0.0:
                raise PlotInputError(f"range must be a positive real, got {self.range!r}")
            object.__setattr__(self, "range", value)
        suffix = self.output.suffix.lower()
        if suffix not in RASTER_EXTENSIONS:
            raise PlotInputError(
                f"output extension {suffix!r} is not a raster format; "
                f"expected one of {', '.join(RASTER_EXTENSIONS)}"
            )
        if not isinstance(self.title, str):
            raise PlotInputError(f"title must be a string, got {self.title!r}")


@dataclass(frozen=True)
class RenderResult:
    image: Path
    grid: Path
    meta: Path
    bins: int
    extent: float
    overflow: int


def read_samples(path) -> np.ndarray:
    """Parse a samples CSV into an (n, 2) float array.

    Accepts any row count >= 1 (a single-point file still renders), but the
    header must declare exactly the two coordinate columns x0,x1.
    """
    path = Path(path)
    try:
        with open(path, "r", newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise PlotInputError(f"{path}: empty file, expected a run_id,x0,x1 header")
            header_text = ",".join(header)
            if not _HEADER_PATTERN.match(header_text):
                raise PlotInputError(
                    f"{path}: bad header {header_text!r}, expected run_id,x0,...,x{{d-1}}"
                )
            dim = len(header) - 1
            if header[1:] != [f"x{j}" for j in range(dim)]:
                raise PlotInputError(
                    f"{path}: coordinate columns must be x0..x{dim - 1} in order, "
                    f"got {header[1:]}"
                )
            if dim != 2:
                raise UnsupportedDimensionError(
                    f"{path}: samples are {dim}-dimensional; only d=2 can be plotted"
                )
            rows = []
            for lineno, fields in enumerate(reader, start=2):
                if not fields:
                    continue
                if len(fields) != 3:
                    raise PlotInputError(
                        f"{path}:{lineno}: expected 3 fields, got {len(fields)}"
                    )
                try:
                    rows.append((float(fields[1]), float(fields[2])))
                except ValueError:
                    raise PlotInputError(
                        f"{path}:{lineno}: non-numeric coordinate in {fields!r}"
                    )
    except OSError as err:
        raise PlotInputError(f"cannot read samples file: {err}")
    if not rows:
        raise PlotInputError(f"{path}: no sample rows after the header")
    data = np.asarray(rows, dtype=float)
    if not np.all(np.isfinite(data)):
        raise PlotInputError(f"{path}: samples contain non-finite values")
    return data


def read_theoretical(path) -> np.ndarray:
    """Extract the 2x2 theoretical covariance from a report JSON file."""
    path = Path(path)
    try:
        payload = json.loads(path.read_text())
    except OSError as err:
        raise PlotInputError(f"cannot read report file: {err}")
    except json.JSONDecodeError as err:
        raise PlotInputError(f"{path}: invalid JSON ({err})")
    if not isinstance(payload, dict) or "theoretical" not in payload:
        raise PlotInputError(f"{path}: report JSON lacks a 'theoretical' entry")
    matrix = np.asarray(payload["theoretical"], dtype=float)
    if matrix.shape != (2, 2):
        raise PlotInputError(
            f"{path}: theoretical covariance has shape {matrix.shape}, expected (2, 2)"
        )
    if not np.all(np.isfinite(matrix)):
        raise PlotInputError(f"{path}: theoretical covariance has non-finite entries")
    return (matrix + matrix.T) / 2.0


def auto_extent(samples: np.ndarray) -> float:
    ext = float(np.percentile(np.hypot(samples[:, 0], samples[:, 1]), _AUTO_PERCENTILE))
    if not math.isfinite(ext) or ext <= 0.0:
        ext = 1.0
    return ext


def bin_counts(samples: np.ndarray, bins: int, extent: float):
    """Counts over [-extent, extent]^2; returns (bins x bins int64, overflow)."""
    edges = np.linspace(-extent, extent, bins + 1)
    grid, _, _ = np.histogram2d(samples[:, 0], samples[:, 1], bins=(edges, edges))
    counts = grid.astype(np.int64)
    overflow = int(samples.shape[0] - counts.sum())
    return counts, overflow


def grid_csv_text(counts: np.ndarray) -> str:
    """Row i lists the counts of x0-bin i, comma-joined, ascending x1."""
    return "".join(",".join(str(int(v)) for v in row) + "\n" for row in counts)


def ellipse_points(covariance: np.ndarray, sigma: float) -> np.ndarray:
    """Boundary of {x : x^T V^{-1} x = sigma^2} as a (2, m) polyline."""
    values, vectors = np.linalg.eigh(covariance)
    values = np.clip(values, 0.0, None)
    root = vectors @ np.diag(np.sqrt(values)) @ vectors.T
    angles = np.linspace(0.0, 2.0 * math.pi, _ELLIPSE_POINTS)
    circle = np.vstack([np.cos(angles), np.sin(angles)])
    return sigma * (root @ circle)


def ellipse_area(covariance: np.ndarray, sigma: float) -> float:
    """Area of the sigma-level ellipse, pi * sigma^2 * sqrt(det V)."""
    det = float(np.linalg.det(np.asarray(covariance, dtype=float)))
    if det < 0.0:
        raise PlotInputError(f"covariance determinant is negative ({det})")
    return math.pi * sigma * sigma * math.sqrt(det)


def _side_paths(output: Path):
    stem = output.stem
    return (
        output.with_name(f"{stem}_grid.csv"),
        output.with_name(f"{stem}_meta.json"),
    )


def render(spec: PlotSpec) -> RenderResult:
    """Produce the heatmap image plus its grid.csv / meta.json side files."""
    samples = read_samples(spec.input_csv)
    theoretical = None
    if spec.report_json is not None:
        theoretical = read_theoretical(spec.report_json)

    extent = auto_extent(samples) if spec.range == AUTO_RANGE else float(spec.range)
    counts, overflow = bin_counts(samples, spec.bins, extent)

    fig, ax = plt.subplots(figsize=(6.0, 5.0), dpi=120)
    try:
        window = (-extent, extent, -extent, extent)
        image = ax.imshow(
            counts.T,
            origin="lower",
            extent=window,
            cmap="viridis",
            interpolation="nearest",
            aspect="equal",
        )
        fig.colorbar(image, ax=ax, label="runs per cell")
        if theoretical is not None:
            for sigma in _ELLIPSE_SIGMAS:
                boundary = ellipse_points(theoretical, sigma)
                ax.plot(
                    boundary[0],
                    boundary[1],
                    color="white",
                    linestyle="--",
                    linewidth=1.2,
                    label=f"{sigma:g} sigma (theory)",
                )
            ax.legend(loc="upper right", framealpha=0.4, fontsize=8)
        ax.set_xlim(window[0], window[1])
        ax.set_ylim(window[2], window[3])
        ax.set_xlabel("x0")
        ax.set_ylabel("x1")
        if spec.title:
            ax.set_title(spec.title)
        spec.output.parent.mkdir(parents=True, exist_ok=True)
        save_kwargs = {}
        if spec.output.suffix.lower() == ".png":
            save_kwargs["metadata"] = {"Software": "orderplot"}
        fig.savefig(spec.output, **save_kwargs)
    finally:
        plt.close(fig)

    grid_path, meta_path = _side_paths(spec.output)
    grid_path.write_text(grid_csv_text(counts))
    meta = {
        "bins": spec.bins,
        "extent": extent,
        "input": spec.input_csv.name,
        "overflow": overflow,
        "range": spec.range if isinstance(spec.range, str) else float(spec.range),
        "title": spec.title,
        "total_runs": int(samples.shape[0]),
    }
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return RenderResult(
        image=spec.output,
        grid=grid_path,
        meta=meta_path,
        bins=spec.bins,
        extent=extent,
        overflow=overflow,
    )
