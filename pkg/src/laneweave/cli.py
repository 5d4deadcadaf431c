"""Command-line front end wiring ingestion, calibration, generation,
evaluation, synthesis, and benchmarking into reproducible runs.

Input CSV schema, one file per tour: header t,dist_left,dist_right,v_lon
with an optional trailing lane_id column; t in seconds, distances in
meters, velocity in km/h, rows sorted by t.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, fields
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import _kernels
from .core import DriveLog, ModelParams, OffsetSeries
from .errors import (
    CalibrationError,
    EmptySeriesError,
    LaneweaveError,
    ModelFormatError,
    SchemaError,
)
from .evaluation import EvalMode, run_mode, summarize
from .generator import (
    TwoLevelModel,
    atomic_write_text,
    coarse_profile,
    generate_profile,
    load_model,
    save_model,
)
from .markov import CoarseModel, count_transitions, discretize, transitions_from_counts
from .noise import cap, extract_fine, fit_kernel, generate_noise
from .preprocessing import Segment, extract_segments, resample
from .synthetic import SyntheticSpec, make_model, simulate_drive_log

EXIT_OK = 0
EXIT_ARGUMENT = 2
EXIT_SCHEMA = 3
EXIT_CALIBRATION = 4
EXIT_FAILURE = 1

CONFIG_ENV = "LANEWEAVE_CONFIG"
CSV_COLUMNS = ("t", "dist_left", "dist_right", "v_lon")


class ArgumentUsageError(LaneweaveError):
    """Bad command-line argument values detected after parsing."""


@dataclass(frozen=True)
class RunConfig:
    """Effective knobs of a run: model parameters plus pipeline settings."""

    n_c: int = 20
    dt: float = 0.2
    smoothing_sigma: float = 0.6
    smoothing_support: float = 1.0
    cap_threshold: float = 0.03
    v_min: float = 40.0
    sample_rate: float = 5.0
    snippet_duration: float = 10.0
    knot_count: int = 6
    window_length: int = 256
    jump_threshold: float = 0.25
    guard_steps: int = 10

    def model_params(self) -> ModelParams:
        return ModelParams(
            n_c=self.n_c,
            dt=self.dt,
            smoothing_sigma=self.smoothing_sigma,
            smoothing_support=self.smoothing_support,
            cap_threshold=self.cap_threshold,
            v_min=self.v_min,
            sample_rate=self.sample_rate,
            snippet_duration=self.snippet_duration,
        )

    def to_dict(self) -> dict:
        return asdict(self)


_CONFIG_FIELDS = {f.name: f.type for f in fields(RunConfig)}


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Built-in defaults, overlaid by the config file, overlaid by flags."""
    settings = asdict(RunConfig())
    config_path = getattr(args, "config", None) or os.environ.get(CONFIG_ENV)
    if config_path:
        try:
            document = json.loads(Path(config_path).read_text())
        except FileNotFoundError:
            raise SchemaError(f"config file not found: {config_path}") from None
        except json.JSONDecodeError as exc:
            raise SchemaError(f"config file is not valid JSON: {exc}") from None
        if not isinstance(document, dict):
            raise SchemaError("config file must hold a JSON object")
        for key, value in document.items():
            if key not in _CONFIG_FIELDS:
                raise SchemaError(f"unknown config key {key!r}")
            settings[key] = value
    for key in _CONFIG_FIELDS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    try:
        return RunConfig(**settings)
    except (TypeError, ValueError) as exc:
        raise ArgumentUsageError(f"invalid configuration: {exc}") from None


def read_drive_log_csv(path) -> DriveLog:
    """Parse one tour CSV; structural problems raise SchemaError naming
    the offending column and 1-based data row."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except FileNotFoundError:
        raise SchemaError(f"input file not found: {path}") from None
    if not lines:
        raise SchemaError(f"{path}: empty file, expected a header row")
    header = tuple(cell.strip() for cell in lines[0].split(","))
    if header[: len(CSV_COLUMNS)] != CSV_COLUMNS or header not in (
        CSV_COLUMNS,
        CSV_COLUMNS + ("lane_id",),
    ):
        raise SchemaError(
            f"{path}: header must be {','.join(CSV_COLUMNS)}[,lane_id], got {','.join(header)}"
        )
    has_lane = len(header) == len(CSV_COLUMNS) + 1

    columns: list[list[float]] = [[] for _ in header]
    previous_t = None
    for row_number, line in enumerate(lines[1:], start=1):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != len(header):
            raise SchemaError(
                f"{path}: row {row_number} has {len(cells)} fields, expected {len(header)}",
                row=row_number,
            )
        for col, (name, cell) in enumerate(zip(header, cells)):
            cell = cell.strip()
            if name == "lane_id" and cell == "":
                columns[col].append(np.nan)
                continue
            try:
                columns[col].append(float(cell))
            except ValueError:
                raise SchemaError(
                    f"{path}: row {row_number}, column {name!r}: cannot parse {cell!r}",
                    column=name,
                    row=row_number,
                ) from None
        if previous_t is not None and columns[0][-1] <= previous_t:
            raise SchemaError(
                f"{path}: row {row_number}: timestamps must be strictly increasing",
                column="t",
                row=row_number,
            )
        previous_t = columns[0][-1]

    return DriveLog(
        t=columns[0],
        dist_left=columns[1],
        dist_right=columns[2],
        v_lon=columns[3],
        lane_id=columns[4] if has_lane else None,
        tour_id=path.stem,
    )


def format_drive_log_csv(log: DriveLog) -> str:
    lines = [",".join(CSV_COLUMNS + ("lane_id",))]
    for i in range(len(log)):
        lane = "" if np.isnan(log.lane_id[i]) else repr(float(log.lane_id[i]))
        lines.append(
            f"{float(log.t[i])!r},{float(log.dist_left[i])!r},"
            f"{float(log.dist_right[i])!r},{float(log.v_lon[i])!r},{lane}"
        )
    return "\n".join(lines) + "\n"


def format_profile_csv(series: OffsetSeries) -> str:
    lines = ["t,x"]
    for i, value in enumerate(series.values):
        lines.append(f"{float(i * series.dt)!r},{float(value)!r}")
    return "\n".join(lines) + "\n"


def ingest_segments(paths, config: RunConfig) -> list[Segment]:
    params = config.model_params()
    segments: list[Segment] = []
    for path in paths:
        log = read_drive_log_csv(path)
        track = resample(log, config.sample_rate)
        segments.extend(
            extract_segments(
                track,
                params,
                jump_threshold=config.jump_threshold,
                guard_steps=config.guard_steps,
            )
        )
    return segments


def calibrate_from_segments(
    segments: list[Segment], config: RunConfig, metadata: dict | None = None
) -> tuple[TwoLevelModel, dict]:
    """Full calibration: transition estimation plus the spectral fit.

    Returns the model and a summary with segment counts, usable minutes,
    per-row visit totals, and the spectral fit residual.
    """
    if not segments:
        raise CalibrationError("no road-following segments in the input data")
    params = config.model_params()
    state_segments = [discretize(seg.series.values, params.n_c) for seg in segments]
    counts = count_transitions(state_segments, params.n_c)
    coarse = CoarseModel(
        n_c=params.n_c,
        dt=params.dt,
        transition=transitions_from_counts(counts),
        smoothing_sigma=params.smoothing_sigma,
        smoothing_support=params.smoothing_support,
    )
    capped = [cap(extract_fine(seg.series, params), params.cap_threshold) for seg in segments]
    fine, fit = fit_kernel(
        capped, params, knot_count=config.knot_count, window_length=config.window_length
    )
    total_steps = sum(len(seg) for seg in segments)
    model = TwoLevelModel(
        params=params,
        coarse=coarse,
        fine=fine,
        metadata=dict(metadata or {}),
    )
    summary = {
        "segment_count": len(segments),
        "usable_minutes": total_steps * params.dt / 60.0,
        "row_visits": counts.sum(axis=1).tolist(),
        "spectral_windows": fit.window_count,
        "fit_residual": fit.residual,
        "knot_values": fit.knot_values.tolist(),
    }
    return model, summary


def bench_generation(model: TwoLevelModel, steps: int, repetitions: int) -> list[dict]:
    """Wall times for full, drift-only, and jitter-only generation on
    every available backend.

    Phase times are best-of-N; the offline-noise saving is the median of
    the per-repetition paired (full - coarse) differences, which keeps
    its sign meaningful when scheduler noise exceeds the jitter share.
    """
    if steps < 1 or repetitions < 1:
        raise ArgumentUsageError("steps and repetitions must be positive")
    params = model.params
    duration = steps * params.dt
    initial_state = discretize(0.0, params.n_c)
    results = []
    for backend in _kernels.available_backends():
        with _kernels.forced_backend(backend):
            generate_profile(model, 0.0, duration, 0)  # warm-up, includes JIT
            full = coarse = noise = float("inf")
            paired_diffs = []
            for rep in range(repetitions):
                start = time.perf_counter()
                generate_profile(model, 0.0, duration, rep)
                full_rep = time.perf_counter() - start

                start = time.perf_counter()
                coarse_profile(model, initial_state, steps, np.random.default_rng(rep))
                coarse_rep = time.perf_counter() - start

                start = time.perf_counter()
                generate_noise(model.fine, steps, np.random.default_rng(rep))
                noise = min(noise, time.perf_counter() - start)

                full = min(full, full_rep)
                coarse = min(coarse, coarse_rep)
                paired_diffs.append(full_rep - coarse_rep)
        results.append(
            {
                "backend": backend,
                "steps": steps,
                "repetitions": repetitions,
                "full_s": full,
                "coarse_s": coarse,
                "noise_s": noise,
                "saving_s": float(np.median(paired_diffs)),
                "speedup_vs_realtime": duration / full,
            }
        )
    return results


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def cmd_calibrate(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    segments = ingest_segments(args.input, config)
    metadata = {
        "source_tours": [Path(p).stem for p in args.input],
        "created_at": _utc_now(),
        "config": config.to_dict(),
    }
    model, summary = calibrate_from_segments(segments, config, metadata)
    save_model(model, args.out)
    visits = np.asarray(summary["row_visits"])
    print(f"calibrated model written to {args.out}")
    print(
        f"segments={summary['segment_count']} usable_minutes={summary['usable_minutes']:.1f} "
        f"spectral_windows={summary['spectral_windows']} fit_residual={summary['fit_residual']:.4f}"
    )
    print(f"row visits: min={visits.min()} median={int(np.median(visits))} max={visits.max()}")
    print(f"effective config: {json.dumps(config.to_dict(), sort_keys=True)}")
    return EXIT_OK


def cmd_generate(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    if not -0.5 <= args.x0 <= 0.5:
        raise ArgumentUsageError(f"--x0 must lie in [-0.5, 0.5], got {args.x0}")
    if args.duration < model.params.dt:
        raise ArgumentUsageError("--duration must cover at least one step")
    profile = generate_profile(model, args.x0, args.duration, args.seed)
    atomic_write_text(args.out, format_profile_csv(profile))
    print(f"wrote {len(profile)} steps to {args.out} (seed={args.seed})")
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    config = resolve_config(args)
    modes = []
    for name in args.modes.split(","):
        try:
            modes.append(EvalMode.parse(name))
        except ValueError as exc:
            raise ArgumentUsageError(str(exc)) from None
    segments = ingest_segments(args.input, config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for mode in modes:
        report = run_mode(mode, segments, model, args.seed)
        document = report.to_dict()
        document["config"] = config.to_dict()
        atomic_write_text(out_dir / f"report_{mode.value}.json", json.dumps(document, indent=2) + "\n")
        atomic_write_text(out_dir / f"summary_{mode.value}.csv", summarize(report))
        worst = max(report.ks, key=report.ks.get)
        print(
            f"mode={mode.value} snippets={report.snippet_count} "
            f"max_ks={report.ks[worst]:.4f} ({worst})"
        )
    print(f"reports written to {out_dir}")
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    spec = SyntheticSpec(
        n_c=args.n_c if args.n_c is not None else 20,
        dt=args.dt if args.dt is not None else 0.2,
        family=args.family,
        stay_probability=args.p,
        kernel=args.kernel,
        tour_seconds=args.minutes * 60.0,
        lane_width=args.lane_width,
        seed=args.seed,
    )
    model = make_model(spec)
    log = simulate_drive_log(model, spec.tour_seconds, spec.lane_width, spec.seed)
    atomic_write_text(args.out, format_drive_log_csv(log))
    print(f"wrote {len(log)} samples ({args.minutes:.1f} min at {model.params.sample_rate:g} Hz) to {args.out}")
    if args.model_out:
        save_model(model, args.model_out)
        print(f"ground-truth model written to {args.model_out}")
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    results = bench_generation(model, args.steps, args.reps)
    duration = args.steps * model.params.dt
    print(f"profile of {args.steps} steps = {duration:.0f} s simulated, best of {args.reps}")
    for row in results:
        print(
            f"backend={row['backend']:<5} full={row['full_s'] * 1e3:8.3f} ms  "
            f"coarse={row['coarse_s'] * 1e3:8.3f} ms  noise={row['noise_s'] * 1e3:8.3f} ms  "
            f"offline-noise saving={row['saving_s'] / row['full_s']:5.1%}  "
            f"speedup={row['speedup_vs_realtime']:,.0f}x realtime"
        )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="laneweave",
        description="Calibrate, generate, and evaluate in-lane lateral offset profiles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_options(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help=f"JSON config file (or set {CONFIG_ENV})")
        p.add_argument("--n-c", dest="n_c", type=int)
        p.add_argument("--dt", type=float)
        p.add_argument("--smoothing-sigma", dest="smoothing_sigma", type=float)
        p.add_argument("--smoothing-support", dest="smoothing_support", type=float)
        p.add_argument("--cap-threshold", dest="cap_threshold", type=float)
        p.add_argument("--v-min", dest="v_min", type=float)
        p.add_argument("--sample-rate", dest="sample_rate", type=float)
        p.add_argument("--snippet-duration", dest="snippet_duration", type=float)
        p.add_argument("--knot-count", dest="knot_count", type=int)
        p.add_argument("--window-length", dest="window_length", type=int)
        p.add_argument("--jump-threshold", dest="jump_threshold", type=float)
        p.add_argument("--guard-steps", dest="guard_steps", type=int)

    p = sub.add_parser("calibrate", help="fit a model from tour CSVs")
    p.add_argument("--input", nargs="+", required=True, metavar="CSV")
    p.add_argument("--out", required=True, help="model JSON destination")
    add_config_options(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("generate", help="write an artificial offset profile CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--x0", type=float, required=True, help="initial relative offset")
    p.add_argument("--duration", type=float, required=True, help="seconds")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="compare real tours against the model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", nargs="+", required=True, metavar="CSV")
    p.add_argument("--modes", default="shift,coarse,fine,full")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    add_config_options(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", help="simulate a tour CSV from a ground-truth model")
    p.add_argument("--family", default="banded", help="banded | uniform | identity")
    p.add_argument("--p", type=float, default=0.9, help="banded stay probability")
    p.add_argument("--kernel", default="reference", help="reference | zero | identity")
    p.add_argument("--minutes", type=float, default=50.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lane-width", dest="lane_width", type=float, default=3.6)
    p.add_argument("--n-c", dest="n_c", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--out", required=True, help="tour CSV destination")
    p.add_argument("--model-out", dest="model_out", help="also write the ground-truth model")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bench", help="time profile generation per backend")
    p.add_argument("--model", required=True)
    p.add_argument("--steps", type=int, default=18000)
    p.add_argument("--reps", type=int, default=5)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ArgumentUsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARGUMENT
    except (SchemaError, ModelFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (CalibrationError, EmptySeriesError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except LaneweaveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
