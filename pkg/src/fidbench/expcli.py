"""Experiment harness and command line.

``run`` simulates seeded multi-trial tomography experiments: each trial draws
a true state and a particle cloud from the same prior, feeds simulated
measurement shots through the particle filter, and logs the posterior bounds
plus the mean estimator's fidelity to the truth. Outputs are a trace CSV
(one row per reported shot), a summary JSON with per-shot medians and
interquartile ranges, and per-trial measurement-record JSONL files.

``replay`` recomputes a trace from stored measurement records; with the same
config and seed the CSV is byte-identical to the original run. ``bounds``
prints the bound report of a checkpointed ensemble.

Randomness is split into three independent streams per trial (state and
particle initialization, measurement outcomes, resampling), so replay stays
exact even though it skips the measurement stream entirely. The seed
resolution order is config file, then command-line flags, then the
FIDBENCH_SEED environment variable.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
from dataclasses import dataclass, field, replace

import numpy as np

try:
    import tomllib
except ImportError:  # Python 3.10
    import tomli as tomllib

from .bounds import compute_bound_report, theorem1_pure_optimum
from .ensembles import (
    PRIOR_NAMES,
    RngStream,
    WeightedEnsemble,
    ensemble_from_jsonl,
    moments,
    prior_sampler,
)
from .measure import (
    COVARIANT,
    HAAR_BASIS,
    records_from_jsonl,
    records_to_jsonl,
    simulate_basis_shot,
    simulate_covariant_shot,
)
from .qmat import DensityMatrix, fidelity
from .smc import ResampleParams, SmcCollapseError, bayes_update, initial_state

__all__ = [
    "ExperimentConfig",
    "TraceRow",
    "load_config",
    "run_trial",
    "run_experiment",
    "replay",
    "main",
    "TRACE_COLUMNS",
]

ENV_SEED = "FIDBENCH_SEED"
MEASUREMENT_NAMES = (COVARIANT, HAAR_BASIS)

# Stream channels within a trial; channel 3 is reserved.
INIT_CHANNEL = 0
MEAS_CHANNEL = 1
SMC_CHANNEL = 2

TRACE_COLUMNS = (
    "trial",
    "shot",
    "mean_fidelity_to_truth",
    "pure_optimum_fidelity_to_truth",
    "fvg_bound",
    "super_analytic_bound",
    "super_exact_bound",
    "mean_estimator_value",
    "sigma_sharp_is_state",
    "ess",
)

SUMMARY_SERIES = (
    "mean_fidelity_to_truth",
    "pure_optimum_fidelity_to_truth",
    "fvg_bound",
    "super_analytic_bound",
    "super_exact_bound",
    "mean_estimator_value",
)


@dataclass(frozen=True)
class ExperimentConfig:
    dimension: int = 2
    prior: str = "haar_pure"
    n_particles: int = 1000
    n_shots: int = 100
    n_trials: int = 10
    measurement: str = COVARIANT
    seed: int = 0
    report_every: int | None = None
    resample: ResampleParams = field(default_factory=ResampleParams)

    def effective_report_every(self) -> int:
        if self.report_every is not None:
            return self.report_every
        return 5 if self.dimension >= 8 else 1

    def validate(self) -> None:
        if self.dimension < 2:
            raise ValueError(f"dimension must be at least 2, got {self.dimension}")
        if self.prior not in PRIOR_NAMES:
            raise ValueError(f"prior must be one of {PRIOR_NAMES}, got {self.prior!r}")
        if self.n_particles < 10:
            raise ValueError(f"n_particles must be at least 10, got {self.n_particles}")
        if self.n_shots < 0:
            raise ValueError(f"n_shots must be non-negative, got {self.n_shots}")
        if self.n_trials < 1:
            raise ValueError(f"n_trials must be at least 1, got {self.n_trials}")
        if self.measurement not in MEASUREMENT_NAMES:
            raise ValueError(
                f"measurement must be one of {MEASUREMENT_NAMES}, got {self.measurement!r}"
            )
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")
        if self.report_every is not None and self.report_every < 1:
            raise ValueError(f"report_every must be at least 1, got {self.report_every}")
        # ResampleParams validates its own ranges at construction.


@dataclass(frozen=True)
class TraceRow:
    trial: int
    shot: int
    mean_fidelity_to_truth: float
    pure_optimum_fidelity_to_truth: float | None
    fvg_bound: float
    super_analytic_bound: float
    super_exact_bound: float
    mean_estimator_value: float
    sigma_sharp_is_state: bool
    ess: float


_CONFIG_KEYS = {
    "dimension": int,
    "prior": str,
    "n_particles": int,
    "n_shots": int,
    "n_trials": int,
    "measurement": str,
    "seed": int,
    "report_every": int,
}
_RESAMPLE_KEYS = {
    "a": float,
    "ess_fraction": float,
    "epsilon": float,
    "pure_preserving": bool,
}


def load_config(path) -> ExperimentConfig:
    """Parse a TOML config file; unknown keys are hard errors."""
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    return config_from_dict(data, source=str(path))


def config_from_dict(data: dict, source: str = "config") -> ExperimentConfig:
    kwargs = {}
    for key, value in data.items():
        if key == "resample":
            if not isinstance(value, dict):
                raise ValueError(f"{source}: resample must be a table")
            rkwargs = {}
            for rkey, rval in value.items():
                if rkey not in _RESAMPLE_KEYS:
                    raise ValueError(f"{source}: unknown key resample.{rkey}")
                want = _RESAMPLE_KEYS[rkey]
                if want is float and isinstance(rval, int) and not isinstance(rval, bool):
                    rval = float(rval)
                if not isinstance(rval, want):
                    raise ValueError(
                        f"{source}: resample.{rkey} must be {want.__name__}, got {rval!r}"
                    )
                rkwargs[rkey] = rval
            kwargs["resample"] = ResampleParams(**rkwargs)
        elif key in _CONFIG_KEYS:
            want = _CONFIG_KEYS[key]
            if want is int and isinstance(rv := value, bool):
                raise ValueError(f"{source}: {key} must be {want.__name__}, got {rv!r}")
            if not isinstance(value, want):
                raise ValueError(f"{source}: {key} must be {want.__name__}, got {value!r}")
            kwargs[key] = value
        else:
            raise ValueError(f"{source}: unknown key {key}")
    cfg = ExperimentConfig(**kwargs)
    cfg.validate()
    return cfg


def apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    """Command-line flags override file values; the env seed overrides both."""
    updates = {}
    for flag, key in (
        ("seed", "seed"),
        ("trials", "n_trials"),
        ("shots", "n_shots"),
        ("particles", "n_particles"),
        ("prior", "prior"),
        ("dimension", "dimension"),
        ("measurement", "measurement"),
    ):
        val = getattr(args, flag, None)
        if val is not None:
            updates[key] = val
    if updates:
        cfg = replace(cfg, **updates)
    env_seed = os.environ.get(ENV_SEED)
    if env_seed is not None:
        try:
            cfg = replace(cfg, seed=int(env_seed))
        except ValueError:
            raise ValueError(f"{ENV_SEED} must be an integer, got {env_seed!r}") from None
    cfg.validate()
    return cfg


def _simulate_shot(cfg: ExperimentConfig, truth: DensityMatrix, rng: RngStream):
    if cfg.measurement == COVARIANT:
        return simulate_covariant_shot(truth, rng)
    return simulate_basis_shot(truth, rng)


def _make_row(cfg, trial_index, shot, state, truth, n_particles) -> TraceRow:
    m = moments(state.ensemble)
    report = compute_bound_report(state.ensemble, m=m)
    mean_state = DensityMatrix(m.mean.mat)
    mean_fid = fidelity(mean_state, truth)
    pure_fid = None
    if report.pure_optimum is not None:
        _, estimator = theorem1_pure_optimum(m)
        pure_fid = fidelity(estimator, truth)
    ess = state.ess_history[-1] if state.ess_history else float(n_particles)
    return TraceRow(
        trial=trial_index,
        shot=shot,
        mean_fidelity_to_truth=mean_fid,
        pure_optimum_fidelity_to_truth=pure_fid,
        fvg_bound=report.fvg_bound,
        super_analytic_bound=report.super_analytic_bound,
        super_exact_bound=report.super_exact_bound,
        mean_estimator_value=report.mean_estimator_posterior_value,
        sigma_sharp_is_state=report.sigma_sharp_is_state,
        ess=ess,
    )


def _collapse_row(trial_index: int, shot: int) -> TraceRow:
    # Error marker: fidelities and bounds NaN, ESS 0 (a live filter has ESS >= 1).
    nan = math.nan
    return TraceRow(
        trial=trial_index,
        shot=shot,
        mean_fidelity_to_truth=nan,
        pure_optimum_fidelity_to_truth=None,
        fvg_bound=nan,
        super_analytic_bound=nan,
        super_exact_bound=nan,
        mean_estimator_value=nan,
        sigma_sharp_is_state=False,
        ess=0.0,
    )


def _run_trial(cfg: ExperimentConfig, trial_index: int, records=None):
    """One trial; returns (rows, records used). records=None simulates fresh shots."""
    d = cfg.dimension
    sampler = prior_sampler(cfg.prior)
    init_rng = RngStream(cfg.seed, trial_index * 4 + INIT_CHANNEL)
    truth = sampler(d, init_rng)
    stack = sampler(d, init_rng, size=cfg.n_particles)
    ensemble = WeightedEnsemble(stack)
    meas_rng = RngStream(cfg.seed, trial_index * 4 + MEAS_CHANNEL)
    smc_rng = RngStream(cfg.seed, trial_index * 4 + SMC_CHANNEL)

    state = initial_state(ensemble)
    every = cfg.effective_report_every()
    rows = [_make_row(cfg, trial_index, 0, state, truth, cfg.n_particles)]
    used = []
    last_emitted = 0
    for shot in range(1, cfg.n_shots + 1):
        if records is None:
            rec = _simulate_shot(cfg, truth, meas_rng)
        else:
            if shot - 1 >= len(records):
                break
            rec = records[shot - 1]
        used.append(rec)
        try:
            state = bayes_update(state, rec, rng=smc_rng, params=cfg.resample)
        except SmcCollapseError:
            rows.append(_collapse_row(trial_index, shot))
            return rows, used
        if shot % every == 0 or shot == cfg.n_shots:
            rows.append(_make_row(cfg, trial_index, shot, state, truth, cfg.n_particles))
            last_emitted = shot
    processed = len(used)
    if processed > last_emitted:
        rows.append(_make_row(cfg, trial_index, processed, state, truth, cfg.n_particles))
    return rows, used


def run_trial(cfg: ExperimentConfig, trial_index: int) -> list:
    """Simulate one trial and return its trace rows."""
    cfg.validate()
    rows, _ = _run_trial(cfg, trial_index)
    return rows


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.12g}"


def write_trace_csv(rows, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(TRACE_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(getattr(row, col)) for col in TRACE_COLUMNS) + "\n")


def _summarize(rows, cfg: ExperimentConfig) -> dict:
    """Per-shot median/quartiles across trials; collapse markers are excluded."""
    shots = sorted({row.shot for row in rows if not math.isnan(row.mean_fidelity_to_truth)})
    series = {name: {"median": [], "q25": [], "q75": []} for name in SUMMARY_SERIES}
    state_freq = []
    for shot in shots:
        here = [
            r for r in rows if r.shot == shot and not math.isnan(r.mean_fidelity_to_truth)
        ]
        for name in SUMMARY_SERIES:
            vals = [getattr(r, name) for r in here]
            vals = [v for v in vals if v is not None]
            if vals:
                q25, med, q75 = np.percentile(vals, [25.0, 50.0, 75.0])
                series[name]["median"].append(float(med))
                series[name]["q25"].append(float(q25))
                series[name]["q75"].append(float(q75))
            else:
                series[name]["median"].append(None)
                series[name]["q25"].append(None)
                series[name]["q75"].append(None)
        state_freq.append(float(np.mean([r.sigma_sharp_is_state for r in here])))
    n_collapsed = len({r.trial for r in rows if math.isnan(r.mean_fidelity_to_truth)})
    overall = [r.sigma_sharp_is_state for r in rows if not math.isnan(r.mean_fidelity_to_truth)]
    return {
        "n_trials": cfg.n_trials,
        "n_collapsed_trials": n_collapsed,
        "shots": shots,
        **series,
        "sigma_sharp_is_state_frequency": state_freq,
        "sigma_sharp_is_state_frequency_overall": float(np.mean(overall)) if overall else None,
    }


def run_experiment(cfg: ExperimentConfig, out_dir) -> str:
    """Run all trials, write trace.csv, summary.json and per-trial records.

    Returns the trace CSV path. Trials run sequentially on independent
    streams; the trace is ordered by (trial, shot).
    """
    cfg.validate()
    os.makedirs(out_dir, exist_ok=True)
    records_dir = os.path.join(out_dir, "records")
    os.makedirs(records_dir, exist_ok=True)
    all_rows = []
    for trial in range(cfg.n_trials):
        rows, used = _run_trial(cfg, trial)
        all_rows.extend(rows)
        records_to_jsonl(used, os.path.join(records_dir, f"trial_{trial:04d}.jsonl"))
    trace_path = os.path.join(out_dir, "trace.csv")
    write_trace_csv(all_rows, trace_path)
    with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(_summarize(all_rows, cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return trace_path


_TRIAL_FILE = re.compile(r"trial_(\d+)\.jsonl$")


def replay(records_path, cfg: ExperimentConfig, out_dir=None) -> list:
    """Recompute trace rows from stored measurement records.

    records_path is either one trial's JSONL file or a directory of
    trial_NNNN.jsonl files. With the original config and seed the rows are
    identical to the original run's; a truncated record file yields rows up
    to the truncation point. When out_dir is given, trace.csv and
    summary.json are written there as well.
    """
    cfg.validate()
    if os.path.isdir(records_path):
        names = sorted(n for n in os.listdir(records_path) if _TRIAL_FILE.search(n))
        if not names:
            raise ValueError(f"no trial_*.jsonl files in {records_path}")
        jobs = [
            (int(_TRIAL_FILE.search(n).group(1)), os.path.join(records_path, n)) for n in names
        ]
    else:
        m = _TRIAL_FILE.search(os.path.basename(records_path))
        jobs = [(int(m.group(1)) if m else 0, records_path)]
    all_rows = []
    for trial_index, path in jobs:
        records = records_from_jsonl(path)
        for rec in records:
            if rec.dim != cfg.dimension:
                raise ValueError(
                    f"{path}: record dimension {rec.dim} does not match config "
                    f"dimension {cfg.dimension}"
                )
        rows, _ = _run_trial(cfg, trial_index, records=records)
        all_rows.extend(rows)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        write_trace_csv(all_rows, os.path.join(out_dir, "trace.csv"))
        with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8") as fh:
            json.dump(_summarize(all_rows, cfg), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return all_rows


def _add_override_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="RNG seed")
    p.add_argument("--trials", type=int, default=None, help="number of trials")
    p.add_argument("--shots", type=int, default=None, help="shots per trial")
    p.add_argument("--particles", type=int, default=None, help="particles per trial")
    p.add_argument("--prior", choices=PRIOR_NAMES, default=None, help="prior ensemble")
    p.add_argument("--dimension", type=int, default=None, help="Hilbert space dimension")
    p.add_argument(
        "--measurement", choices=MEASUREMENT_NAMES, default=None, help="measurement model"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fidbench",
        description="Simulated Bayesian tomography with online estimator-fidelity bounds",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a seeded multi-trial experiment")
    run_p.add_argument("config", nargs="?", default=None, help="TOML config file")
    run_p.add_argument("--out-dir", required=True, help="output directory")
    _add_override_flags(run_p)

    rep_p = sub.add_parser("replay", help="recompute a trace from stored records")
    rep_p.add_argument("records", help="records JSONL file or directory of trial_*.jsonl")
    rep_p.add_argument("config", nargs="?", default=None, help="TOML config file")
    rep_p.add_argument("--out-dir", default=None, help="output directory")
    _add_override_flags(rep_p)

    b_p = sub.add_parser("bounds", help="bound report for a checkpointed ensemble")
    b_p.add_argument("ensemble", help="ensemble JSONL file")
    return parser


def _resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    return apply_overrides(cfg, args)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = _resolve_config(args)
            trace_path = run_experiment(cfg, args.out_dir)
            print(trace_path)
        elif args.command == "replay":
            cfg = _resolve_config(args)
            rows = replay(args.records, cfg, out_dir=args.out_dir)
            if args.out_dir is None:
                sys.stdout.write(",".join(TRACE_COLUMNS) + "\n")
                for row in rows:
                    sys.stdout.write(
                        ",".join(_fmt(getattr(row, col)) for col in TRACE_COLUMNS) + "\n"
                    )
        elif args.command == "bounds":
            e = ensemble_from_jsonl(args.ensemble)
            report = compute_bound_report(e)
            print(json.dumps(report.to_json_dict(), indent=2, sort_keys=True))
    except (ValueError, OSError, SmcCollapseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
