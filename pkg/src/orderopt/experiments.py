"""Monte Carlo harness, covariance estimation, and the CSV/JSON interchange.

A Monte Carlo pass executes N independent runs (run_index = 0..N-1) and
collects the scaled deviations sqrt(K)(x_K - x*) or sqrt(K)(xbar_K - x*) as
rows of a SampleMatrix. Rows are keyed by run index, so results do not depend
on worker scheduling, and a pass is reproducible bit for bit from
(seed, config).
"""

import csv
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from multiprocessing import get_context
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .linalg import SymMatrix, eig_sym, inverse_spd, sqrt_spd
from .oracle import QuadraticProblem
from .optimizer import DivergenceError, RunConfig, run
from .rand import NoiseModel
from .theory import TheoryContext, alpha_of, c_constant, stability_threshold


class SampleKind(Enum):
    SCALED_LAST = "scaled_last"
    SCALED_AVG = "scaled_avg"


class DegenerateSampleError(ValueError):
    """An eigendirection of the empirical covariance has non-positive mass."""


class MonteCarloDivergence(RuntimeError):
    """One or more runs diverged; carries (run_index, step, norm) triples."""

    def __init__(self, failures):
        self.failures = list(failures)
        indices = [idx for idx, _, _ in self.failures]
        super().__init__(
            f"{len(self.failures)} run(s) diverged at run indices {indices}"
        )


class SchemaError(ValueError):
    """A samples CSV file does not match the documented schema."""


@dataclass(frozen=True, eq=False)
class SampleMatrix:
    """N x d matrix of scaled deviations, one run per row."""

    rows: np.ndarray
    kind: SampleKind

    def __post_init__(self):
        kind = self.kind
        if isinstance(kind, str):
            object.__setattr__(self, "kind", SampleKind(kind))
        elif not isinstance(kind, SampleKind):
            raise ValueError(f"unknown sample kind: {kind!r}")
        rows = np.array(self.rows, dtype=float)
        if rows.ndim != 2:
            raise ValueError(f"rows must be 2-D, got shape {rows.shape}")
        if rows.shape[0] < 2:
            raise ValueError(f"need at least 2 runs, got {rows.shape[0]}")
        if not np.all(np.isfinite(rows)):
            raise ValueError("sample rows must all be finite")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def n_runs(self) -> int:
        return self.rows.shape[0]

    @property
    def dim(self) -> int:
        return self.rows.shape[1]


@dataclass(frozen=True, eq=False)
class CovarianceReport:
    """Empirical-vs-theoretical covariance comparison for one experiment."""

    empirical: SymMatrix
    theoretical: SymMatrix
    frobenius_rel_err: float
    gap_eigenvalues: np.ndarray
    standardized_deviation: float
    n_runs: int
    steps: int
    setting: int
    eta: float
    kind: SampleKind

    def __post_init__(self):
        if not self.frobenius_rel_err >= 0.0:
            raise ValueError("frobenius_rel_err must be non-negative")
        gap = np.asarray(self.gap_eigenvalues, dtype=float)
        gap.setflags(write=False)
        object.__setattr__(self, "gap_eigenvalues", gap)


@dataclass(frozen=True, eq=False)
class Histogram2D:
    """bins x bins counts over [-range, range]^2 plus an out-of-range tally."""

    counts: np.ndarray
    overflow: int
    bins: int
    extent: float

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)


_RESULT_FIELD = {
    SampleKind.SCALED_LAST: "scaled_last",
    SampleKind.SCALED_AVG: "scaled_avg",
}


def _run_range(problem, base, start, stop, kinds):
    """Execute runs [start, stop); returns per-kind row blocks and failures."""
    blocks = {kind: np.empty((stop - start, problem.dim)) for kind in kinds}
    failures = []
    for i in range(start, stop):
        try:
            result = run(problem, replace(base, run_index=i))
        except DivergenceError as err:
            failures.append((i, err.k, err.norm))
            for kind in kinds:
                blocks[kind][i - start] = np.nan
            continue
        for kind in kinds:
            blocks[kind][i - start] = getattr(result, _RESULT_FIELD[kind])
    return start, blocks, failures


def monte_carlo_multi(
    problem: QuadraticProblem,
    base: RunConfig,
    n_runs: int,
    kinds: Sequence[SampleKind],
    threads: Optional[int] = None,
    progress: bool = False,
) -> Dict[SampleKind, SampleMatrix]:
    """One pass of n_runs runs collecting every requested sample kind at once."""
    if n_runs < 2:
        raise ValueError(f"n_runs must be at least 2, got {n_runs}")
    kinds = tuple(SampleKind(k) for k in kinds)
    if not kinds:
        raise ValueError("at least one sample kind is required")
    if threads is None:
        threads = os.cpu_count() or 1
    threads = max(1, int(threads))

    out = {kind: np.empty((n_runs, problem.dim)) for kind in kinds}
    failures = []
    done = 0

    def note_progress(done_now):
        nonlocal done
        before = done
        done = done_now
        if progress and done // 1000 > before // 1000:
            print(f"runs completed: {done}/{n_runs}", file=sys.stderr)

    if threads == 1:
        for i in range(n_runs):
            _, blocks, fails = _run_range(problem, base, i, i + 1, kinds)
            failures.extend(fails)
            for kind in kinds:
                out[kind][i] = blocks[kind][0]
            note_progress(i + 1)
    else:
        span = max(1, min(256, n_runs // (threads * 4) or 1))
        ranges = [(s, min(s + span, n_runs)) for s in range(0, n_runs, span)]
        ctx = get_context("fork")
        with ProcessPoolExecutor(max_workers=threads, mp_context=ctx) as pool:
            jobs = [
                pool.submit(_run_range, problem, base, s, e, kinds) for s, e in ranges
            ]
            for job in jobs:
                start, blocks, fails = job.result()
                failures.extend(fails)
                for kind in kinds:
                    out[kind][start : start + blocks[kind].shape[0]] = blocks[kind]
                note_progress(done + blocks[kinds[0]].shape[0])

    if failures:
        raise MonteCarloDivergence(sorted(failures))
    return {kind: SampleMatrix(out[kind], kind) for kind in kinds}


def monte_carlo(
    problem: QuadraticProblem,
    base: RunConfig,
    n_runs: int,
    kind: SampleKind,
    threads: Optional[int] = None,
    progress: bool = False,
) -> SampleMatrix:
    kind = SampleKind(kind)
    return monte_carlo_multi(problem, base, n_runs, (kind,), threads, progress)[kind]


def empirical_covariance(samples: SampleMatrix) -> SymMatrix:
    """Second moment about zero: (1/N) sum_i row_i row_i^T.

    Zero is the theoretical mean of the scaled deviations, so centering there
    keeps the estimator unbiased under the null and converts any mean drift
    into visible covariance inflation.
    """
    rows = samples.rows
    return SymMatrix(rows.T @ rows / rows.shape[0])


def estimate_c_alpha(
    emp: SymMatrix,
    problem: QuadraticProblem,
    eta: float,
    alpha_noise: NoiseModel,
) -> float:
    """Invert the last-iterate covariance relation per Hessian eigendirection.

    For eigenpair (lambda_i, u_i) with vhat_i = u_i^T emp u_i the scalar
    relation v = eta^2/(d(2 eta (1-1/d)(c alpha/sqrt(d)) lambda - 1)) inverts
    to (c alpha)_i = sqrt(d)(eta^2/(d vhat_i) + 1)/(2 eta (1-1/d) lambda_i);
    the estimate is the mean over i.
    """
    d = problem.dim
    ctx = TheoryContext(problem, alpha_noise, c_constant(d), alpha_of(alpha_noise))
    threshold = stability_threshold(ctx)
    if not eta > threshold:
        # surfaces the precondition before any estimation arithmetic
        from .theory import StepSizeTooSmallError

        raise StepSizeTooSmallError(eta, threshold)

    dec = problem.eigen
    estimates = []
    for i in range(d):
        u = dec.eigenvectors[:, i]
        lam = dec.eigenvalues[i]
        vhat = float(u @ emp.entries @ u)
        if vhat <= 0.0:
            raise DegenerateSampleError(
                f"empirical covariance is non-positive along eigendirection {i}: "
                f"vhat = {vhat:.6e}"
            )
        estimates.append(
            np.sqrt(d) * (eta * eta / (d * vhat) + 1.0) / (2.0 * eta * (1.0 - 1.0 / d) * lam)
        )
    return float(np.mean(estimates))


def standardize(samples: SampleMatrix, v_theory: SymMatrix) -> SampleMatrix:
    """Rows mapped through V^{-1/2}; output covariance should approach identity."""
    w = sqrt_spd(inverse_spd(v_theory))
    return SampleMatrix(samples.rows @ w.entries, samples.kind)


def histogram2d(samples: SampleMatrix, bins: int, extent: float) -> Histogram2D:
    """bins x bins counts over [-extent, extent]^2; outside samples are tallied.

    counts[i, j] covers x0-bin i and x1-bin j; the final bin includes its
    right edge, matching numpy's binning convention.
    """
    if samples.dim != 2:
        raise ValueError(f"histograms require d=2 samples, got d={samples.dim}")
    if bins < 1:
        raise ValueError(f"bins must be at least 1, got {bins}")
    if not extent > 0.0:
        raise ValueError(f"range must be positive, got {extent}")
    edges = np.linspace(-extent, extent, bins + 1)
    grid, _, _ = np.histogram2d(samples.rows[:, 0], samples.rows[:, 1], bins=(edges, edges))
    counts = grid.astype(np.int64)
    overflow = int(samples.n_runs - counts.sum())
    return Histogram2D(counts, overflow, int(bins), float(extent))


def build_report(
    samples: SampleMatrix,
    theoretical: SymMatrix,
    setting: int,
    steps: int,
    eta: float,
) -> CovarianceReport:
    """Pair an empirical covariance with its theoretical target."""
    emp = empirical_covariance(samples)
    diff = emp.entries - theoretical.entries
    rel = float(np.linalg.norm(diff, "fro") / np.linalg.norm(theoretical.entries, "fro"))
    gap = eig_sym(SymMatrix(diff)).eigenvalues
    std_cov = empirical_covariance(standardize(samples, theoretical))
    d = samples.dim
    std_dev = float(
        np.linalg.norm(std_cov.entries - np.eye(d), "fro") / np.sqrt(d)
    )
    return CovarianceReport(
        empirical=emp,
        theoretical=theoretical,
        frobenius_rel_err=rel,
        gap_eigenvalues=gap,
        standardized_deviation=std_dev,
        n_runs=samples.n_runs,
        steps=int(steps),
        setting=int(setting),
        eta=float(eta),
        kind=samples.kind,
    )


def report_to_dict(report: CovarianceReport) -> dict:
    return {
        "setting": report.setting,
        "kind": report.kind.value,
        "n_runs": report.n_runs,
        "steps": report.steps,
        "eta": report.eta,
        "empirical": report.empirical.entries.tolist(),
        "theoretical": report.theoretical.entries.tolist(),
        "frobenius_rel_err": report.frobenius_rel_err,
        "gap_eigenvalues": report.gap_eigenvalues.tolist(),
        "standardized_deviation": report.standardized_deviation,
    }


def report_from_dict(data: dict) -> CovarianceReport:
    return CovarianceReport(
        empirical=SymMatrix(data["empirical"]),
        theoretical=SymMatrix(data["theoretical"]),
        frobenius_rel_err=float(data["frobenius_rel_err"]),
        gap_eigenvalues=np.asarray(data["gap_eigenvalues"], dtype=float),
        standardized_deviation=float(data["standardized_deviation"]),
        n_runs=int(data["n_runs"]),
        steps=int(data["steps"]),
        setting=int(data["setting"]),
        eta=float(data["eta"]),
        kind=SampleKind(data["kind"]),
    )


_HEADER_RE = re.compile(r"^run_id(,x\d+)+$")


def write_samples_csv(samples: SampleMatrix, path) -> None:
    """Header run_id,x0,...,x{d-1}; floats as shortest round-trip decimals."""
    d = samples.dim
    with open(path, "w", newline="") as fh:
        fh.write("run_id," + ",".join(f"x{j}" for j in range(d)) + "\n")
        for i in range(samples.n_runs):
            row = samples.rows[i]
            fh.write(str(i) + "," + ",".join(repr(float(v)) for v in row) + "\n")


def read_samples_csv(path, kind: SampleKind) -> SampleMatrix:
    """Parse and validate a samples CSV written by write_samples_csv."""
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: file is empty") from None
        joined = ",".join(header)
        if not _HEADER_RE.match(joined):
            raise SchemaError(f"{path}: bad header {joined!r}")
        d = len(header) - 1
        expected_cols = ["x%d" % j for j in range(d)]
        if header[1:] != expected_cols:
            raise SchemaError(f"{path}: coordinate columns must be x0..x{d-1}")
        ids = []
        rows = []
        for lineno, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != d + 1:
                raise SchemaError(f"{path}:{lineno}: expected {d + 1} fields")
            try:
                ids.append(int(record[0]))
                rows.append([float(v) for v in record[1:]])
            except ValueError as err:
                raise SchemaError(f"{path}:{lineno}: {err}") from None
    if len(rows) < 2:
        raise SchemaError(f"{path}: need at least 2 sample rows, got {len(rows)}")
    order = np.argsort(np.asarray(ids), kind="stable")
    data = np.asarray(rows, dtype=float)[order]
    if not np.all(np.isfinite(data)):
        raise SchemaError(f"{path}: non-finite sample values")
    return SampleMatrix(data, kind)
