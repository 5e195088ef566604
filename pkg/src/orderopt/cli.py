"""Command-line front end: simulate, theory, compare, estimate.

Configuration is one JSON document; unknown fields anywhere in it are errors.
Exit codes: 0 success, 2 config/schema problems, 3 run divergence,
4 estimation failure.
"""

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .experiments import (
    DegenerateSampleError,
    MonteCarloDivergence,
    SampleKind,
    SchemaError,
    build_report,
    empirical_covariance,
    estimate_c_alpha,
    monte_carlo,
    read_samples_csv,
    report_to_dict,
    write_samples_csv,
)
from .linalg import SymMatrix
from .optimizer import RunConfig
from .oracle import NotStronglyConvexError, QuadraticProblem
from .rand import NoiseKind, NoiseModel
from .theory import (
    StepSizeTooSmallError,
    TheoryContext,
    check_hurwitz,
    covariance_gap,
    eta_opt,
    v_averaged,
    v_last_iterate,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_ESTIMATION = 4

_SETTING_KIND = {
    1: SampleKind.SCALED_LAST,
    2: SampleKind.SCALED_LAST,
    3: SampleKind.SCALED_AVG,
}

_NOISE_KINDS = {"sphere": NoiseKind.SPHERE_UNIFORM, "ball": NoiseKind.BALL_UNIFORM}


class ConfigError(ValueError):
    """Configuration file problem; message names the offending field."""


@dataclass(frozen=True)
class ExperimentConfig:
    problem: QuadraticProblem
    noise: NoiseModel
    setting: int
    eta: Union[float, str]
    theta: float
    gamma: float
    steps: int
    n_runs: int
    init_radius: float
    seed: int
    out_dir: Optional[str]


def _require_fields(data: dict, known: dict, where: str) -> None:
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"unknown field(s) in {where}: {', '.join(unknown)}")
    missing = sorted(k for k, required in known.items() if required and k not in data)
    if missing:
        raise ConfigError(f"missing required field(s) in {where}: {', '.join(missing)}")


def _real(data: dict, field: str, where: str, default=None):
    if field not in data:
        return default
    value = data[field]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"field '{field}' in {where} must be a number, got {value!r}")
    return float(value)


def _integer(data: dict, field: str, where: str, default=None):
    if field not in data:
        return default
    value = data[field]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"field '{field}' in {where} must be an integer, got {value!r}")
    return int(value)


def _parse_problem(data) -> QuadraticProblem:
    if not isinstance(data, dict):
        raise ConfigError("'problem' must be an object")
    _require_fields(data, {"hessian": True, "linear": False, "constant": False}, "problem")
    try:
        hessian = SymMatrix(np.asarray(data["hessian"], dtype=float))
    except (ValueError, TypeError) as err:
        raise ConfigError(f"problem.hessian: {err}") from None
    linear = data.get("linear")
    constant = _real(data, "constant", "problem", 0.0)
    try:
        return QuadraticProblem(
            hessian,
            np.zeros(hessian.dim) if linear is None else np.asarray(linear, dtype=float),
            constant,
        )
    except (ValueError, NotStronglyConvexError) as err:
        raise ConfigError(f"problem: {err}") from None


def _parse_noise(data, dim: int) -> NoiseModel:
    if not isinstance(data, dict):
        raise ConfigError("'noise' must be an object")
    _require_fields(data, {"kind": True, "radius": True}, "noise")
    kind = data["kind"]
    if kind not in _NOISE_KINDS:
        raise ConfigError(
            f"noise.kind must be one of {sorted(_NOISE_KINDS)}, got {kind!r}"
        )
    try:
        return NoiseModel(_NOISE_KINDS[kind], _real(data, "radius", "noise"), dim)
    except ValueError as err:
        raise ConfigError(f"noise: {err}") from None


_TOP_FIELDS = {
    "problem": True,
    "noise": True,
    "setting": True,
    "eta": True,
    "steps": True,
    "n_runs": True,
    "seed": True,
    "theta": False,
    "gamma": False,
    "init_radius": False,
    "out_dir": False,
}


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config: {err}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"config is not valid JSON: {err}") from None
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    _require_fields(data, _TOP_FIELDS, "config")

    problem = _parse_problem(data["problem"])
    noise = _parse_noise(data["noise"], problem.dim)

    setting = _integer(data, "setting", "config")
    if setting not in (1, 2, 3):
        raise ConfigError(f"setting must be 1, 2 or 3, got {data['setting']!r}")

    eta = data["eta"]
    if isinstance(eta, str):
        if eta != "optimal":
            raise ConfigError(f"eta must be a positive number or \"optimal\", got {eta!r}")
        if setting == 1:
            raise ConfigError('eta="optimal" is only valid with settings 2 and 3')
    else:
        eta = _real(data, "eta", "config")
        if not (np.isfinite(eta) and eta > 0.0):
            raise ConfigError(f"eta must be positive, got {eta}")
        if setting == 2:
            raise ConfigError('setting 2 pins eta="optimal"; use setting 1 for a manual eta')

    steps = _integer(data, "steps", "config")
    n_runs = _integer(data, "n_runs", "config")
    seed = _integer(data, "seed", "config")
    theta = _real(data, "theta", "config", 1.0)
    gamma = _real(data, "gamma", "config", 0.1)
    init_radius = _real(data, "init_radius", "config", 10.0)
    out_dir = data.get("out_dir")
    if out_dir is not None and not isinstance(out_dir, str):
        raise ConfigError("out_dir must be a string path")

    cfg = ExperimentConfig(
        problem=problem,
        noise=noise,
        setting=setting,
        eta=eta,
        theta=theta,
        gamma=gamma,
        steps=steps,
        n_runs=n_runs,
        init_radius=init_radius,
        seed=seed,
        out_dir=out_dir,
    )
    _build_run_config(cfg)  # surface RunConfig validation as ConfigError now
    return cfg


def _context(cfg: ExperimentConfig) -> TheoryContext:
    return TheoryContext.for_problem(cfg.problem, cfg.noise)


def resolve_eta(cfg: ExperimentConfig, ctx: TheoryContext) -> float:
    if cfg.eta == "optimal":
        return eta_opt(ctx)
    return float(cfg.eta)


def _build_run_config(cfg: ExperimentConfig, eta: float = 1.0) -> RunConfig:
    try:
        return RunConfig(
            dim=cfg.problem.dim,
            steps=cfg.steps,
            eta=eta,
            theta=cfg.theta,
            gamma=cfg.gamma,
            noise=cfg.noise,
            init_radius=cfg.init_radius,
            seed=cfg.seed,
        )
    except ValueError as err:
        raise ConfigError(str(err)) from None


def _theoretical_matrix(cfg: ExperimentConfig, ctx: TheoryContext, eta: float) -> SymMatrix:
    if cfg.setting == 3:
        return v_averaged(ctx)
    if cfg.setting == 2:
        return v_last_iterate(ctx, eta_opt(ctx))
    return v_last_iterate(ctx, eta)


def _json_dump(data, fh) -> None:
    json.dump(data, fh, indent=2, sort_keys=True)
    fh.write("\n")


def _matrix_or_error(fn) -> object:
    try:
        return fn().entries.tolist()
    except StepSizeTooSmallError as err:
        return {"error": str(err)}


def cmd_theory(cfg: ExperimentConfig) -> int:
    ctx = _context(cfg)
    eta = resolve_eta(cfg, ctx)
    payload = {
        "c": ctx.c,
        "alpha": ctx.alpha,
        "eta": eta,
        "eta_opt": eta_opt(ctx),
        "V_last_at_eta": _matrix_or_error(lambda: v_last_iterate(ctx, eta)),
        "V_last_at_eta_opt": _matrix_or_error(lambda: v_last_iterate(ctx, eta_opt(ctx))),
        "V_avg": v_averaged(ctx).entries.tolist(),
        "gap_eigenvalues": covariance_gap(ctx).tolist(),
        "hurwitz": check_hurwitz(ctx),
    }
    _json_dump(payload, sys.stdout)
    return EXIT_OK


def cmd_simulate(
    cfg: ExperimentConfig,
    out_dir,
    threads: Optional[int],
    runs_override: Optional[int],
    steps_override: Optional[int],
) -> int:
    ctx = _context(cfg)
    eta = resolve_eta(cfg, ctx)
    n_runs = cfg.n_runs if runs_override is None else runs_override
    steps = cfg.steps if steps_override is None else steps_override
    base = RunConfig(
        dim=cfg.problem.dim,
        steps=steps,
        eta=eta,
        theta=cfg.theta,
        gamma=cfg.gamma,
        noise=cfg.noise,
        init_radius=cfg.init_radius,
        seed=cfg.seed,
    )
    kind = _SETTING_KIND[cfg.setting]
    samples = monte_carlo(cfg.problem, base, n_runs, kind, threads=threads, progress=True)

    theoretical = _theoretical_matrix(cfg, ctx, eta)
    report = build_report(samples, theoretical, cfg.setting, steps, eta)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_samples_csv(samples, out / "samples.csv")
    with open(out / "report.json", "w") as fh:
        _json_dump(report_to_dict(report), fh)
    print(f"wrote {out / 'samples.csv'} and {out / 'report.json'}", file=sys.stderr)
    return EXIT_OK


def cmd_compare(cfg: ExperimentConfig, samples_path, out_dir) -> int:
    ctx = _context(cfg)
    eta = resolve_eta(cfg, ctx)
    kind = _SETTING_KIND[cfg.setting]
    samples = read_samples_csv(samples_path, kind)
    if samples.dim != cfg.problem.dim:
        raise SchemaError(
            f"samples have d={samples.dim} but the config problem has d={cfg.problem.dim}"
        )
    theoretical = _theoretical_matrix(cfg, ctx, eta)
    report = build_report(samples, theoretical, cfg.setting, cfg.steps, eta)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "report.json", "w") as fh:
        _json_dump(report_to_dict(report), fh)
    _json_dump(report_to_dict(report), sys.stdout)
    return EXIT_OK


def cmd_estimate(cfg: ExperimentConfig, samples_path) -> int:
    if cfg.eta == "optimal":
        raise ConfigError(
            "estimate requires the numeric eta the samples were generated with"
        )
    samples = read_samples_csv(samples_path, _SETTING_KIND[cfg.setting])
    if samples.dim != cfg.problem.dim:
        raise SchemaError(
            f"samples have d={samples.dim} but the config problem has d={cfg.problem.dim}"
        )
    emp = empirical_covariance(samples)
    c_alpha = estimate_c_alpha(emp, cfg.problem, float(cfg.eta), cfg.noise)
    d = cfg.problem.dim
    implied = d * np.sqrt(d) / ((d - 1.0) * c_alpha * cfg.problem.mu)
    _json_dump({"c_alpha": c_alpha, "eta_opt_implied": float(implied)}, sys.stdout)
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="orderopt",
        description="Comparison-oracle descent: simulation and asymptotics toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, samples=False):
        p.add_argument("--config", required=True, help="JSON experiment config")
        if samples:
            p.add_argument("--samples", required=True, help="samples.csv path")

    p_sim = sub.add_parser("simulate", help="run Monte Carlo, write samples.csv + report.json")
    common(p_sim)
    p_sim.add_argument("--out", default=None, help="output directory (default: config out_dir or .)")
    p_sim.add_argument("--threads", type=int, default=None, help="worker processes")
    p_sim.add_argument("--runs", type=int, default=None, help="override config n_runs")
    p_sim.add_argument("--steps", type=int, default=None, help="override config steps")

    p_theory = sub.add_parser("theory", help="print closed-form objects as JSON")
    common(p_theory)

    p_cmp = sub.add_parser("compare", help="compare a samples.csv against theory")
    common(p_cmp, samples=True)
    p_cmp.add_argument("--out", default=None, help="output directory for report.json")

    p_est = sub.add_parser("estimate", help="estimate c*alpha from Setting-1 samples")
    common(p_est, samples=True)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.command == "theory":
            return cmd_theory(cfg)
        if args.command == "simulate":
            out_dir = args.out or cfg.out_dir or "."
            return cmd_simulate(cfg, out_dir, args.threads, args.runs, args.steps)
        if args.command == "compare":
            out_dir = args.out or cfg.out_dir or "."
            return cmd_compare(cfg, args.samples, out_dir)
        if args.command == "estimate":
            return cmd_estimate(cfg, args.samples)
        raise AssertionError(f"unhandled command {args.command}")
    except (ConfigError, SchemaError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except MonteCarloDivergence as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except (DegenerateSampleError, StepSizeTooSmallError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_ESTIMATION


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
