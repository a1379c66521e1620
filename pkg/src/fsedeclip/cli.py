"""Batch command line front end: clip, declip, eval, sweep.

Exit codes: 0 success, 1 usage error, 2 I/O or file-format error,
3 processing error. Every command is reproducible: identical inputs and
flags produce identical outputs and reports.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .clipping import ClipSpec, detect_clipped, estimate_threshold, hard_clip, normalize_peak
from .core import LOST, FseParams, SnrReport, params_from_config
from .engine import ENGINES, declip, find_runs
from .evaluate import SweepSpec, average_rows, report_csv, report_json, run_sweep, snr_miss
from .wavio import WavError, read_wav, write_wav

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_PROCESSING = 3

PCM16_TOLERANCE = 2.0 / 32768.0


class UsageError(Exception):
    """Bad flag value detected after argparse; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; this tool reserves 2 for I/O
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _theta_arg(value: str) -> float:
    try:
        theta = float(value)
    except ValueError:
        raise UsageError(f"--theta must be a number, got {value!r}") from None
    if not 0.0 < theta <= 1.0:
        raise UsageError(f"--theta must be in (0, 1], got {value}")
    return theta


def _positive_int(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


def _load_params(config_path: str | None) -> FseParams:
    if config_path is None:
        return FseParams()
    text = Path(config_path).read_text(encoding="utf-8")
    return params_from_config(text)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fsedeclip",
                     description="Declip audio by sparse Fourier extrapolation.")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p_clip = sub.add_parser("clip", help="peak-normalize and hard-clip a file")
    p_clip.add_argument("input")
    p_clip.add_argument("output")
    p_clip.add_argument("--theta", required=True,
                        help="clipping threshold in (0, 1]")
    p_clip.set_defaults(func=cmd_clip)

    p_declip = sub.add_parser("declip", help="reconstruct clipped samples")
    p_declip.add_argument("input")
    p_declip.add_argument("output")
    p_declip.add_argument("--theta", default="auto",
                          help="clip threshold; 'auto' estimates the rail "
                               "level from each channel (default)")
    p_declip.add_argument("--engine", default="spectral", choices=ENGINES)
    p_declip.add_argument("--config", default=None,
                          help="parameter file of 'key = value' lines")
    p_declip.add_argument("--workers", type=_positive_int, default=1)
    p_declip.add_argument("--tolerance", default="auto",
                          help="clip-detection slack; 'auto' uses 2/32768 "
                               "for 16-bit input and 0 otherwise")
    p_declip.add_argument("--mode", default="sample", choices=("sample", "run"),
                          help="fit one window per clipped sample or per run")
    p_declip.set_defaults(func=cmd_declip)

    p_eval = sub.add_parser("eval", help="score a processed file against the clean one")
    p_eval.add_argument("clean")
    p_eval.add_argument("processed")
    p_eval.add_argument("--theta", required=True,
                        help="threshold that produced the clipped version")
    p_eval.set_defaults(func=cmd_eval)

    p_sweep = sub.add_parser("sweep",
                             help="clip/declip/score a file or directory "
                                  "across thresholds")
    p_sweep.add_argument("input", help="clean .wav file or directory of them")
    p_sweep.add_argument("--out", required=True,
                         help="report base path; writes BASE.csv and BASE.json")
    p_sweep.add_argument("--config", default=None)
    p_sweep.add_argument("--workers", type=_positive_int, default=1)
    p_sweep.add_argument("--engine", action="append", default=None,
                         choices=ENGINES, help="may repeat; default spectral")
    p_sweep.add_argument("--thresholds", default=None,
                         help="comma-separated list, default 0.5,0.6,0.7,0.8,0.9")
    p_sweep.add_argument("--timing", action="store_true",
                         help="record wall time per cell instead of zeros")
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def cmd_clip(args) -> int:
    theta = _theta_arg(args.theta)
    signals, desc = read_wav(args.input)
    out = []
    changed = 0
    for sig in signals:
        normalized = normalize_peak(sig)
        clipped = hard_clip(normalized, theta)
        changed += int(np.count_nonzero(clipped.samples != normalized.samples))
        out.append(clipped)
    write_wav(args.output, out, desc.encoding)
    total = desc.frames * desc.channels
    pct = 100.0 * changed / total if total else 0.0
    print(f"clipped {changed} of {total} samples ({pct:.1f}%)")
    return EXIT_OK


def cmd_declip(args) -> int:
    signals, desc = read_wav(args.input)
    base = _load_params(args.config)
    if args.tolerance == "auto":
        tolerance = PCM16_TOLERANCE if desc.encoding == "pcm16" else 0.0
    else:
        try:
            tolerance = float(args.tolerance)
        except ValueError:
            raise UsageError(
                f"--tolerance must be a number, got {args.tolerance!r}") from None
        if tolerance < 0.0:
            raise UsageError(f"--tolerance must be >= 0, got {tolerance}")
    theta_fixed = None if args.theta == "auto" else _theta_arg(args.theta)

    out = []
    processed_any = False
    for ch, sig in enumerate(signals):
        if theta_fixed is not None:
            theta = theta_fixed
        else:
            theta = estimate_threshold(sig)
            if theta <= tolerance:  # rail below the noise floor: nothing to do
                out.append(sig)
                continue
        mask = detect_clipped(sig, ClipSpec(theta, tolerance))
        lost = mask.count(LOST)
        # auto mode needs plateau evidence: a clean signal touches its peak at
        # isolated samples, a clipped one leaves runs of them
        plateau = any(end - start >= 2
                      for start, end in find_runs(mask.labels == LOST))
        if lost == 0 or (theta_fixed is None and not plateau):
            out.append(sig)
            continue
        processed_any = True
        p = replace(base, clip_threshold=theta)
        restored, _, stats = declip(sig, mask, p, engine=args.engine,
                                    mode=args.mode, workers=args.workers,
                                    timing=True)
        out.append(restored)
        line = (f"channel {ch}: reconstructed {stats.reconstructed} samples "
                f"in {stats.total_iterations} iterations "
                f"({stats.total_seconds:.3f} s)")
        if stats.skipped:
            line += f", skipped {len(stats.skipped)} without support"
        print(line)
    if not processed_any:
        print("no clipped samples found; output equals input")
    write_wav(args.output, out, desc.encoding)
    return EXIT_OK


def cmd_eval(args) -> int:
    theta = _theta_arg(args.theta)
    clean_signals, _ = read_wav(args.clean)
    processed_signals, _ = read_wav(args.processed)
    if len(clean_signals) != len(processed_signals):
        raise ValueError("channel counts differ between clean and processed")
    for ch, (clean, processed) in enumerate(zip(clean_signals, processed_signals)):
        if len(clean) != len(processed):
            raise ValueError(f"channel {ch}: lengths differ")
        clean_n = normalize_peak(clean)
        mask = detect_clipped(hard_clip(clean_n, theta), ClipSpec(theta))
        value = snr_miss(clean_n, processed, mask)
        if value == float("inf"):
            print(f"channel {ch}: exact")
        else:
            print(f"channel {ch}: {value:.6f} dB")
    return EXIT_OK


def _sweep_thresholds(arg: str | None) -> tuple[float, ...]:
    if arg is None:
        return (0.5, 0.6, 0.7, 0.8, 0.9)
    try:
        values = tuple(float(part) for part in arg.split(","))
    except ValueError:
        raise UsageError(f"--thresholds must be comma-separated numbers, "
                         f"got {arg!r}") from None
    for t in values:
        if not 0.0 < t < 1.0:
            raise UsageError(f"threshold {t:g} out of range (0, 1)")
    if not values:
        raise UsageError("--thresholds must name at least one value")
    return values


def cmd_sweep(args) -> int:
    in_path = Path(args.input)
    if in_path.is_dir():
        files = sorted(in_path.glob("*.wav"))
        if not files:
            print(f"error: no .wav files in {in_path}", file=sys.stderr)
            return EXIT_IO
    else:
        files = [in_path]
    spec = SweepSpec(
        thresholds=_sweep_thresholds(args.thresholds),
        engines=tuple(args.engine) if args.engine else ("spectral",),
        params=_load_params(args.config),
        timing=args.timing,
    )
    rows = []
    failures = []
    for path in files:
        try:
            signals, _ = read_wav(path)
            clean = normalize_peak(signals[0])
        except (WavError, OSError, ValueError) as exc:
            failures.append(f"{path.stem}: {exc}")
            continue
        report = run_sweep(clean, spec, workers=args.workers,
                           signal_id=path.stem)
        rows.extend(report.entries)
        failures.extend(report.failures)
    if len(files) > 1:
        rows.extend(average_rows(rows))
    report = SnrReport(tuple(rows), tuple(failures)).sorted()

    base = Path(args.out)
    if base.suffix in (".csv", ".json"):
        base = base.with_suffix("")
    csv_path = base.with_suffix(".csv")
    json_path = base.with_suffix(".json")
    csv_path.write_text(report_csv(report), encoding="utf-8")
    json_path.write_text(report_json(report), encoding="utf-8")
    print(f"wrote {csv_path} and {json_path} ({len(report.entries)} rows, "
          f"{len(report.failures)} failures)")
    if not report.entries:
        print("error: every sweep cell failed", file=sys.stderr)
        return EXIT_PROCESSING
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        if code is None:
            return EXIT_OK
        return code if isinstance(code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (WavError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PROCESSING


if __name__ == "__main__":
    sys.exit(main())
