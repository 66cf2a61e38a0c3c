"""Command-line entry point: run one training mode or the full threshold
sweep, print a per-epoch summary, and optionally write a CSV report.

Sweep mode runs the baseline first and then every threshold with the same
seed, so per-epoch speedups and accuracy deltas compare like with like.
"""
from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass
from pathlib import Path

from .executor import RunReport, train_baseline, train_shadow, train_speculative
from .mnist_io import load_dataset
from .network import METRICS, TrainConfig

DATA_FILES = (
    "train-images-idx3-ubyte",
    "train-labels-idx1-ubyte",
    "t10k-images-idx3-ubyte",
    "t10k-labels-idx1-ubyte",
)

CSV_HEADER = (
    "mode,threshold,metric,seed,epoch,cumulative_time_s,avg_step_us,"
    "accuracy_pct,hit_rate,speedup_total,speedup_step"
)

DEFAULT_SWEEP = (0.1, 0.175, 0.25)


@dataclass
class CliArgs:
    data_dir: Path
    mode: str = "sweep"
    threshold: float = 0.25
    thresholds: tuple[float, ...] = DEFAULT_SWEEP
    epochs: int = 10
    seed: int = 42
    batch_size: int = 15
    learning_rate: float = 0.01
    clip_bound: float = 5.0
    metric: str = "linf"
    out_csv: Path | None = None


def parse_args(argv=None) -> CliArgs:
    parser = argparse.ArgumentParser(
        prog="specbp",
        description="Train the MNIST MLP with speculative backpropagation, "
        "a sequential baseline, or a full threshold sweep.",
    )
    parser.add_argument("--data-dir", required=True, type=Path,
                        help="directory holding the four MNIST IDX files (.gz accepted)")
    parser.add_argument("--mode", choices=["baseline", "speculative", "shadow", "sweep"],
                        default="sweep")
    parser.add_argument("--threshold", type=float, default=0.25,
                        help="speculation threshold for single speculative/shadow runs")
    parser.add_argument("--thresholds", type=_float_list, default=DEFAULT_SWEEP,
                        help="comma-separated thresholds for sweep mode")
    parser.add_argument("--epochs", type=int, default=10)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--batch-size", type=int, default=15)
    parser.add_argument("--learning-rate", type=float, default=0.01)
    parser.add_argument("--clip-bound", type=float, default=5.0)
    parser.add_argument("--metric", choices=list(METRICS), default="linf")
    parser.add_argument("--out-csv", type=Path, default=None)
    ns = parser.parse_args(argv)
    if ns.mode == "sweep" and not ns.thresholds:
        parser.error("sweep mode needs at least one threshold")
    return CliArgs(
        data_dir=ns.data_dir,
        mode=ns.mode,
        threshold=ns.threshold,
        thresholds=tuple(ns.thresholds),
        epochs=ns.epochs,
        seed=ns.seed,
        batch_size=ns.batch_size,
        learning_rate=ns.learning_rate,
        clip_bound=ns.clip_bound,
        metric=ns.metric,
        out_csv=ns.out_csv,
    )


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(part) for part in text.split(",") if part.strip())


def resolve_data_paths(data_dir: Path) -> list[Path]:
    """Locate the four IDX files, accepting gzipped variants."""
    paths = []
    missing = []
    for name in DATA_FILES:
        plain = data_dir / name
        gz = data_dir / (name + ".gz")
        if plain.exists():
            paths.append(plain)
        elif gz.exists():
            paths.append(gz)
        else:
            missing.append(name)
    if missing:
        raise FileNotFoundError(f"missing MNIST files in {data_dir}: {', '.join(missing)}")
    return paths


def _config(args: CliArgs, mode: str, threshold: float) -> TrainConfig:
    return TrainConfig(
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        clip_bound=args.clip_bound,
        threshold=threshold,
        epochs=args.epochs,
        seed=args.seed,
        mode=mode,
        metric=args.metric,
    )


def execute_runs(args: CliArgs, train, test) -> list[RunReport]:
    """Run the configured mode(s) and return one report per configuration."""
    if args.mode == "sweep":
        reports = [train_baseline(_config(args, "baseline", 0.0), train, test)]
        _print_run_tail(reports[0])
        for theta in args.thresholds:
            reports.append(train_speculative(_config(args, "speculative", theta), train, test))
            _print_run_tail(reports[-1])
        return reports
    cfg = _config(args, args.mode, args.threshold)
    if args.mode == "baseline":
        report = train_baseline(cfg, train, test)
    elif args.mode == "speculative":
        report = train_speculative(cfg, train, test)
    else:
        report = train_shadow(cfg, train, test).report
    _print_run_tail(report)
    return [report]


def _print_run_tail(report: RunReport) -> None:
    cfg = report.config
    last = report.records[-1]
    label = cfg.mode if cfg.mode == "baseline" else f"{cfg.mode} th={cfg.threshold:g}"
    print(
        f"[{label}] {cfg.epochs} epochs: time={last.cumulative_time_s:.2f}s "
        f"step={last.avg_step_us:.2f}us acc={last.accuracy_pct:.2f}% hit={last.hit_rate:.4f}",
        flush=True,
    )


def _baseline_report(reports: list[RunReport]) -> RunReport | None:
    for report in reports:
        if report.config.mode == "baseline":
            return report
    return None


def _rows(reports: list[RunReport]) -> list[list[str]]:
    base = _baseline_report(reports)
    rows = []
    for report in reports:
        cfg = report.config
        for rec in report.records:
            if base is not None and len(base.records) >= rec.epoch:
                ref = base.records[rec.epoch - 1]
                speedup_total = f"{ref.cumulative_time_s / rec.cumulative_time_s:.4f}"
                speedup_step = f"{ref.avg_step_us / rec.avg_step_us:.4f}"
            else:
                speedup_total = speedup_step = ""
            rows.append([
                cfg.mode,
                "" if cfg.mode == "baseline" else f"{cfg.threshold:g}",
                cfg.metric,
                str(cfg.seed),
                str(rec.epoch),
                f"{rec.cumulative_time_s:.2f}",
                f"{rec.avg_step_us:.2f}",
                f"{rec.accuracy_pct:.2f}",
                f"{rec.hit_rate:.4f}",
                speedup_total,
                speedup_step,
            ])
    return rows


def write_csv(reports: list[RunReport], path: Path) -> None:
    """One row per (configuration, epoch) in run order, LF line endings."""
    if not reports:
        raise ValueError("no reports to write")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER.split(","))
        writer.writerows(_rows(reports))


def print_summary(reports: list[RunReport]) -> None:
    base = _baseline_report(reports)
    header = (
        f"{'mode':<12} {'th':>6} {'epoch':>5} {'time_s':>9} {'step_us':>8} "
        f"{'acc_%':>7} {'hit':>7} {'spd_tot':>8} {'spd_step':>9} {'d_acc':>6}"
    )
    print(header)
    for report in reports:
        cfg = report.config
        th = "" if cfg.mode == "baseline" else f"{cfg.threshold:g}"
        for rec in report.records:
            if base is not None and len(base.records) >= rec.epoch:
                ref = base.records[rec.epoch - 1]
                spd_tot = f"{ref.cumulative_time_s / rec.cumulative_time_s:8.4f}"
                spd_step = f"{ref.avg_step_us / rec.avg_step_us:9.4f}"
                d_acc = f"{rec.accuracy_pct - ref.accuracy_pct:6.2f}"
            else:
                spd_tot, spd_step, d_acc = f"{'-':>8}", f"{'-':>9}", f"{'-':>6}"
            print(
                f"{cfg.mode:<12} {th:>6} {rec.epoch:>5} {rec.cumulative_time_s:>9.2f} "
                f"{rec.avg_step_us:>8.2f} {rec.accuracy_pct:>7.2f} {rec.hit_rate:>7.4f} "
                f"{spd_tot} {spd_step} {d_acc}"
            )


def run(args: CliArgs) -> int:
    try:
        paths = resolve_data_paths(args.data_dir)
        train, test = load_dataset(*paths)
    except (OSError, ValueError) as e:
        print(f"error: failed to load dataset: {e}", file=sys.stderr)
        return 1
    print(f"loaded {len(train)} train / {len(test)} test samples from {args.data_dir}")
    reports = execute_runs(args, train, test)
    print_summary(reports)
    if args.out_csv is not None:
        try:
            write_csv(reports, args.out_csv)
        except OSError as e:
            print(f"error: failed to write CSV: {e}", file=sys.stderr)
            return 1
        print(f"wrote {args.out_csv}")
    return 0


def main(argv=None) -> int:
    return run(parse_args(argv))


if __name__ == "__main__":
    sys.exit(main())
