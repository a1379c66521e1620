"""Reconstruction quality metrics and threshold sweeps.

The headline metric scores only the samples that were actually clipped; the
untouched samples pass through bit-exactly and would otherwise dilute the
number. A sweep clips one clean signal at several thresholds, declips each
copy, and collects rows suitable for CSV/JSON reports. Reports are
deterministic: rows are fully sorted, floats are printed with fixed
precision, and timing columns are zero unless explicitly requested.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .clipping import ClipSpec, detect_clipped, hard_clip
from .core import LOST, RECONSTRUCTED, AudioSignal, FseParams, SampleMask, SnrReport, SweepRow
from .engine import declip

# In-memory marker for a bit-exact reconstruction; rendered as "exact" in
# reports so a sentinel dB value never collides with a real measurement.
EXACT = float("inf")

# Reported when the clipped samples of the clean signal are all zero; the
# ratio is 0/err and the true value is -inf.
SNR_FLOOR_DB = -99.0


def snr_miss(clean: AudioSignal, estimate: AudioSignal,
             mask: SampleMask) -> float:
    """Signal-to-noise ratio in dB over the clipped positions only.

    Positions count as clipped whether they are still LOST or already
    RECONSTRUCTED; both originate from clipping. Returns EXACT for a
    bit-exact reconstruction.
    """
    if len(clean) != len(estimate) or len(clean) != len(mask):
        raise ValueError("clean, estimate and mask lengths must match")
    miss = (mask.labels == LOST) | (mask.labels == RECONSTRUCTED)
    if not np.any(miss):
        raise ValueError("metric undefined: mask marks no clipped samples")
    s = clean.samples[miss]
    err = s - estimate.samples[miss]
    num = float(np.sum(s * s))
    den = float(np.sum(err * err))
    if den == 0.0:
        return EXACT
    if num == 0.0:
        return SNR_FLOOR_DB
    return 10.0 * math.log10(num / den)


@dataclass(frozen=True)
class SweepSpec:
    """What to run: clip thresholds, declip engines, model parameters.

    timing=False keeps every seconds cell at zero so repeated sweeps produce
    byte-identical reports; set it to True to record wall-clock time instead.
    """

    thresholds: tuple[float, ...] = (0.5, 0.6, 0.7, 0.8, 0.9)
    engines: tuple[str, ...] = ("spectral",)
    params: FseParams = field(default_factory=FseParams)
    timing: bool = False

    def __post_init__(self):
        if not self.thresholds:
            raise ValueError("thresholds must be non-empty")
        for t in self.thresholds:
            if not 0.0 < t < 1.0:
                raise ValueError(f"threshold {t!r} out of range (0, 1)")
        if not self.engines:
            raise ValueError("engines must be non-empty")


BASELINE_ENGINE = "clipped"


def _sweep_cell(clean: AudioSignal, theta: float, spec: SweepSpec,
                signal_id: str) -> tuple[list[SweepRow], list[str]]:
    rows: list[SweepRow] = []
    failures: list[str] = []
    clipped_sig = hard_clip(clean, theta)
    mask = detect_clipped(clipped_sig, ClipSpec(theta))
    n_clipped = int(mask.count(LOST))
    if n_clipped == 0:
        failures.append(f"{signal_id} theta={theta:g}: no sample clips")
        return rows, failures
    rows.append(SweepRow(signal_id, theta, BASELINE_ENGINE,
                         snr_miss(clean, clipped_sig, mask), n_clipped, 0.0))
    for engine in spec.engines:
        try:
            p = replace(spec.params, clip_threshold=theta)
            restored, _, stats = declip(clipped_sig, mask, p, engine=engine,
                                        timing=spec.timing)
            seconds = stats.total_seconds if spec.timing else 0.0
            rows.append(SweepRow(signal_id, theta, engine,
                                 snr_miss(clean, restored, mask),
                                 n_clipped, seconds))
        except Exception as exc:  # record, keep sweeping
            failures.append(
                f"{signal_id} theta={theta:g} engine={engine}: {exc}")
    return rows, failures


def run_sweep(clean: AudioSignal, spec: SweepSpec, workers: int = 1,
              signal_id: str = "signal") -> SnrReport:
    """Clip, declip and score one peak-normalized signal at every threshold.

    Each threshold contributes a baseline row (engine "clipped", the damage
    left untreated) plus one row per declip engine. Thresholds may run on
    several workers; the report is identical for any worker count. Failing
    cells are recorded in the report instead of aborting the sweep.
    """
    peak = float(np.max(np.abs(clean.samples))) if len(clean) else 0.0
    if abs(peak - 1.0) > 1e-9:
        raise ValueError("sweep input must be peak-normalized")
    jobs = [(theta,) for theta in spec.thresholds]
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(
                lambda j: _sweep_cell(clean, j[0], spec, signal_id), jobs))
    else:
        results = [_sweep_cell(clean, theta, spec, signal_id)
                   for (theta,) in jobs]
    rows: list[SweepRow] = []
    failures: list[str] = []
    for r, f in results:
        rows.extend(r)
        failures.extend(f)
    return SnrReport(tuple(rows), tuple(failures)).sorted()


def average_rows(rows: list[SweepRow], signal_id: str = "average") -> list[SweepRow]:
    """Collapse rows from several signals into one row per
    (threshold, engine) cell; dB values average in the dB domain."""
    groups: dict[tuple[float, str], list[SweepRow]] = {}
    for row in rows:
        groups.setdefault((row.theta_c, row.engine), []).append(row)
    out = []
    for (theta, engine), members in sorted(groups.items()):
        snr = float(np.mean([m.snr_db for m in members]))
        clipped = int(round(float(np.mean([m.clipped for m in members]))))
        seconds = float(np.mean([m.seconds for m in members]))
        out.append(SweepRow(signal_id, theta, engine, snr, clipped, seconds))
    return out


def average_gain(report: SnrReport) -> float:
    """Mean dB improvement of declipped rows over their clipped baselines.

    Rows pair up by (signal, threshold); a missing or duplicated baseline is
    an error, as is a pair whose gain is undefined (both sides exact).
    """
    baselines: dict[tuple[str, float], float] = {}
    for row in report.entries:
        if row.engine == BASELINE_ENGINE:
            key = (row.signal, row.theta_c)
            if key in baselines:
                raise ValueError(f"duplicate baseline row for {key}")
            baselines[key] = row.snr_db
    gains = []
    for row in report.entries:
        if row.engine == BASELINE_ENGINE:
            continue
        key = (row.signal, row.theta_c)
        if key not in baselines:
            raise ValueError(f"no baseline row for {key}")
        gain = row.snr_db - baselines[key]
        if math.isnan(gain):
            raise ValueError(f"gain undefined for {key}")
        gains.append(gain)
    if not gains:
        raise ValueError("report has no declipped rows")
    return float(np.mean(gains))


def _format_snr(snr_db: float) -> str:
    return "exact" if math.isinf(snr_db) and snr_db > 0 else f"{snr_db:.6f}"


CSV_HEADER = "signal,theta_c,engine,snr_db,clipped,seconds"


def report_csv(report: SnrReport) -> str:
    """Fixed-precision CSV; identical input rows give identical bytes."""
    lines = [CSV_HEADER]
    for row in report.sorted().entries:
        lines.append(",".join([
            row.signal,
            f"{row.theta_c:g}",
            row.engine,
            _format_snr(row.snr_db),
            str(row.clipped),
            f"{row.seconds:.6f}",
        ]))
    return "\n".join(lines) + "\n"


def report_json(report: SnrReport) -> str:
    """JSON twin of the CSV report, with failures included."""
    payload = {
        "rows": [
            {
                "signal": row.signal,
                "theta_c": row.theta_c,
                "engine": row.engine,
                "snr_db": ("exact" if math.isinf(row.snr_db) and row.snr_db > 0
                           else row.snr_db),
                "clipped": row.clipped,
                "seconds": row.seconds,
            }
            for row in report.sorted().entries
        ],
        "failures": list(report.failures),
    }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"
