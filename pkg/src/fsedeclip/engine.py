"""Window model generation and whole-signal declipping.

A window of fft_size samples is extracted around each clipped sample. Inside
a window every position carries one of four labels: SUPPORT and RECONSTRUCTED
positions hold trusted values and get exponentially decaying weights, LOST
positions are the unknowns (weight 0), and PAD marks positions outside the
extrapolation area or outside the signal (also weight 0). A sparse Fourier
model is fitted greedily to the weighted window, its value at the window
center is clamped into the rail band and written back, and the sample is
relabeled RECONSTRUCTED so later windows can lean on it.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import kernels, reference
from .core import (
    LOST,
    RECONSTRUCTED,
    SUPPORT,
    AudioSignal,
    FseParams,
    SampleMask,
    WindowModel,
    validate_params,
)

# Window-local label for positions that carry no information at all:
# zero-padding past the signal edges and the surplus positions outside the
# 2*support+1 extrapolation area embedded in the transform.
PAD = 3

ENGINES = ("spectral", "reference")

# Guard floor for the pair fit denominator sum_w^2 - |G|^2; |G| < sum_w for
# any non-degenerate weighting, the floor only prevents division blowup.
PAIR_DEN_FLOOR = 1e-12


class NoSupportError(ValueError):
    """The window contains no usable sample; caller should skip it."""


@dataclass(frozen=True)
class WeightVector:
    """Per-position weights over one window plus their cached sum."""

    w: np.ndarray
    sum_w: float


@dataclass
class SpectralState:
    """Frequency-domain image of one window's weighted residual.

    Wr stays equal to the length-n transform of r[i]*w[i] across updates;
    Ww is the transform of the weights, fixed per window; nu counts
    iterations.
    """

    Wr: np.ndarray
    Ww: np.ndarray
    nu: int = 0


_DECAY_CACHE: dict[tuple[int, float], np.ndarray] = {}
_PHASE_CACHE: dict[int, np.ndarray] = {}


def _decay(n: int, rho: float) -> np.ndarray:
    key = (n, rho)
    cached = _DECAY_CACHE.get(key)
    if cached is None:
        center = (n - 1) // 2
        cached = rho ** np.abs(np.arange(n) - center).astype(np.float64)
        cached.setflags(write=False)
        _DECAY_CACHE[key] = cached
    return cached


def _center_phases(n: int) -> tuple[np.ndarray, np.ndarray]:
    """phi_k evaluated at the window center, bins 0..n/2, split re/im."""
    cached = _PHASE_CACHE.get(n)
    if cached is None:
        h = n // 2
        center = (n - 1) // 2
        ki = (np.arange(h + 1, dtype=np.int64) * center) % n
        ph = np.exp((2j * np.pi / n) * ki)
        cached = (np.ascontiguousarray(ph.real), np.ascontiguousarray(ph.imag))
        for part in cached:
            part.setflags(write=False)
        _PHASE_CACHE[n] = cached
    return cached


def window_center(fft_size: int) -> int:
    return (fft_size - 1) // 2


def build_weights(mask_window: np.ndarray, p: FseParams) -> WeightVector:
    """Isotropic decay weights for one window: rho^distance on SUPPORT,
    delta*rho^distance on RECONSTRUCTED, zero on LOST and PAD positions."""
    labels = np.asarray(mask_window)
    n = int(p.fft_size)
    if labels.shape[0] != n:
        raise ValueError(f"window length {labels.shape[0]} != fft_size {n}")
    base = _decay(n, p.rho)
    w = np.zeros(n)
    sup = labels == SUPPORT
    rec = labels == RECONSTRUCTED
    w[sup] = base[sup]
    w[rec] = p.delta * base[rec]
    sum_w = float(np.sum(w))
    if sum_w <= 0.0:
        raise NoSupportError("no support: window has no usable samples")
    return WeightVector(w, sum_w)


def spectral_state(f_window: np.ndarray, weights: WeightVector) -> SpectralState:
    """Initial state: the model is zero, so the residual is the window itself."""
    f_window = np.asarray(f_window, dtype=np.float64)
    return SpectralState(
        Wr=np.fft.fft(f_window * weights.w),
        Ww=np.fft.fft(weights.w),
    )


def project(state: SpectralState, weights: WeightVector) -> np.ndarray:
    """Projection coefficients p_k = Wr[k] / sum_w for every bin.

    Equals the literal weighted inner product ratio because every basis
    function has unit magnitude at every sample, which collapses each
    denominator to sum_w.
    """
    return state.Wr / weights.sum_w


def _pair_metric(W: np.ndarray, G: np.ndarray, sum_w: float,
                 self_bins: np.ndarray) -> np.ndarray:
    """Weighted-energy decrease achievable by each bin's conjugate pair.

    For a self-conjugate bin the pair collapses to a single real atom and
    the decrease is |W|^2 / sum_w. For a true pair the joint least-squares
    fit over {phi_u, phi_{n-u}} explains 2(|W|^2 sum_w - Re(W^2 G)) /
    (sum_w^2 - |G|^2), where G = sum(w * phi_u^2) couples the two atoms.
    """
    mag2 = W.real ** 2 + W.imag ** 2
    den = np.maximum(sum_w * sum_w - (G.real ** 2 + G.imag ** 2),
                     PAIR_DEN_FLOOR * sum_w * sum_w)
    metric = 2.0 * (mag2 * sum_w - ((W * W) * G).real) / den
    metric[self_bins] = mag2[self_bins] / sum_w
    return metric


def select_basis(p: np.ndarray, weights: WeightVector) -> int | None:
    """Pick the basis function whose conjugate pair removes the most weighted
    residual energy; ties break toward the smallest index. Returns None when
    no pair can decrease the energy (the loop has converged)."""
    p = np.asarray(p, dtype=np.complex128)
    n = p.shape[0]
    sum_w = weights.sum_w
    W = p * sum_w
    Ww = np.fft.fft(weights.w)
    G = np.conj(Ww[(2 * np.arange(n)) % n])
    self_bins = np.zeros(n, dtype=bool)
    self_bins[0] = True
    if n % 2 == 0:
        self_bins[n // 2] = True
    metric = _pair_metric(W, G, sum_w, self_bins)
    u = int(np.argmax(metric))
    if not (metric[u] > 0.0):
        return None
    # canonical pair index: the metric is symmetric under k -> n-k
    return min(u, (n - u) % n)


def odc_update(state: SpectralState, model: WindowModel, u: int,
               p_u: complex, gamma: float, Ww: np.ndarray):
    """Accumulate the scaled coefficient for bin u (and its conjugate partner)
    and subtract the new model term from the weighted residual spectrum.

    The coefficient is gamma times the joint least-squares fit of the pair;
    with a vanishing cross term G this reduces to gamma * p_u exactly.
    """
    n = state.Wr.shape[0]
    sum_w = Ww[0].real
    self_bin = u == 0 or (n % 2 == 0 and u == n // 2)
    if self_bin:
        c = complex(gamma * (complex(p_u).real), 0.0)
        model.coeffs[u] = model.coeffs.get(u, 0j) + c
        state.Wr = state.Wr - c * np.roll(Ww, u)
    else:
        G = np.conj(Ww[(2 * u) % n])
        den = max(sum_w * sum_w - (G.real ** 2 + G.imag ** 2),
                  PAIR_DEN_FLOOR * sum_w * sum_w)
        W = complex(p_u) * sum_w
        c = gamma * ((W * sum_w - W.conjugate() * G.conjugate()) / den)
        model.coeffs[u] = model.coeffs.get(u, 0j) + c
        model.coeffs[n - u] = model.coeffs.get(n - u, 0j) + c.conjugate()
        state.Wr = state.Wr - (c * np.roll(Ww, u)
                               + c.conjugate() * np.roll(Ww, -u))
    state.nu += 1
    return state, model


def _run_spectral(f_window: np.ndarray, weights: WeightVector, p: FseParams):
    """Fused kernel path; same loop as project/select/update, carried in the
    redundant half spectrum."""
    n = int(p.fft_size)
    h = n // 2
    w = weights.w
    sum_w = weights.sum_w
    wr = np.fft.rfft(f_window * w)
    ww = np.fft.fft(w)
    ww2 = np.concatenate([ww, ww])
    pair_g = np.conj(ww2[2 * np.arange(h + 1)])
    inv_den = 1.0 / np.maximum(
        sum_w * sum_w - (pair_g.real ** 2 + pair_g.imag ** 2),
        PAIR_DEN_FLOOR * sum_w * sum_w,
    )
    ph_re, ph_im = _center_phases(n)
    coeffs = np.zeros(h + 1, dtype=np.complex128)
    max_iter = int(p.max_iter)
    energies = np.zeros(max_iter)
    e0 = float(np.sum(w * f_window * f_window))
    g_center, iters, converged = kernels.iterate_window(
        np.ascontiguousarray(wr.real), np.ascontiguousarray(wr.imag),
        np.ascontiguousarray(ww2.real), np.ascontiguousarray(ww2.imag),
        np.ascontiguousarray(pair_g.real), np.ascontiguousarray(pair_g.imag),
        inv_den, ph_re, ph_im, sum_w, p.gamma, max_iter,
        p.residual_tol * e0, e0, coeffs, energies,
    )
    return coeffs, float(g_center), int(iters), bool(converged), energies[:iters]


def _coeffs_to_dict(coeffs_half: np.ndarray, n: int) -> dict[int, complex]:
    h = n // 2
    out: dict[int, complex] = {}
    for k in np.nonzero(coeffs_half)[0]:
        c = complex(coeffs_half[k])
        k = int(k)
        if k == 0 or k == h:
            out[k] = complex(c.real, 0.0)
        else:
            out[k] = c
            out[n - k] = c.conjugate()
    return out


def generate_window_model(f_window: np.ndarray, mask_window: np.ndarray,
                          p: FseParams, engine: str = "spectral",
                          center_index: int | None = None,
                          with_energies: bool = False):
    """Fit the sparse model for one window.

    f_window and mask_window are window-local arrays of length fft_size; the
    mask may contain PAD labels. The model starts from zero and grows one
    selected basis pair per iteration until the budget, the residual
    tolerance, or exact convergence stops it.
    """
    f_window = np.asarray(f_window, dtype=np.float64)
    labels = np.asarray(mask_window)
    n = int(p.fft_size)
    if f_window.shape[0] != n or labels.shape[0] != n:
        raise ValueError(f"window length must equal fft_size {n}")
    center = window_center(n)
    if labels[center] != LOST:
        raise ValueError("window center must be a LOST sample")
    if engine not in ENGINES:
        raise ValueError(f"unknown engine {engine!r} (use one of {ENGINES})")
    weights = build_weights(labels, p)
    if engine == "spectral":
        coeffs, g_center, iters, converged, energies = _run_spectral(
            f_window, weights, p)
    else:
        coeffs, g_center, iters, converged, energies = reference.run_window(
            f_window, weights.w, p)
    model = WindowModel(
        center=center if center_index is None else int(center_index),
        coeffs=_coeffs_to_dict(coeffs, n),
        iterations_used=iters,
        converged=converged,
    )
    if with_energies:
        return model, g_center, energies
    return model, g_center


def synthesize(model: WindowModel, n: int) -> np.ndarray:
    """Evaluate the model over a window of length n; complex output so tests
    can check how real it is."""
    spec = np.zeros(n, dtype=np.complex128)
    for k, c in model.coeffs.items():
        spec[k % n] = c
    return np.fft.ifft(spec) * n


def clamp_estimate(g_center: float, original_clipped_value: float,
                   p: FseParams) -> float:
    """Constrain a reconstructed sample into its rail band.

    A sample clipped at +theta_c can only have been at or above the rail, so
    the estimate is clamped into [theta_c, peak]; mirrored for -theta_c.
    """
    theta = p.clip_threshold
    if original_clipped_value >= 0.0:
        return min(max(g_center, theta), p.peak)
    return max(min(g_center, -theta), -p.peak)


def find_runs(flags: np.ndarray) -> list[tuple[int, int]]:
    """Maximal [start, end) blocks of True in a boolean array."""
    edges = np.diff(np.concatenate([[0], flags.astype(np.int8), [0]]))
    starts = np.where(edges == 1)[0]
    ends = np.where(edges == -1)[0]
    return list(zip(starts.tolist(), ends.tolist()))


def _ordered_runs(labels: np.ndarray) -> list[tuple[int, int]]:
    runs = find_runs(labels == LOST)
    runs.sort(key=lambda se: (se[1] - se[0], se[0]))
    return runs


def _outside_in(start: int, end: int) -> list[int]:
    """Consume a run from both ends inward, alternating, left end first."""
    order = []
    lo, hi = start, end - 1
    from_left = True
    while lo <= hi:
        if from_left:
            order.append(lo)
            lo += 1
        else:
            order.append(hi)
            hi -= 1
        from_left = not from_left
    return order


def processing_order(mask: SampleMask | np.ndarray, support: int) -> list[int]:
    """All LOST indices, most-supported first.

    Samples whose windows would contain the most valid neighbors come first;
    that ranking is realized structurally: shorter runs before longer ones
    (leftmost first on equal length), and each run eaten outside-in so every
    reconstruction feeds the next sample's support. `support` fixes the
    neighborhood the priority refers to; the structural order itself does
    not depend on it.
    """
    labels = mask.labels if isinstance(mask, SampleMask) else np.asarray(mask)
    order: list[int] = []
    for start, end in _ordered_runs(labels):
        order.extend(_outside_in(start, end))
    return order


@dataclass(frozen=True)
class RunStats:
    """Per clipped-run accounting: iterations for each window processed
    inside the run (one per sample in sample mode) and wall seconds."""

    start: int
    length: int
    sample_iterations: tuple[int, ...]
    seconds: float

    @property
    def iterations(self) -> int:
        return sum(self.sample_iterations)


@dataclass(frozen=True)
class DeclipStats:
    reconstructed: int
    skipped: tuple[int, ...]
    runs: tuple[RunStats, ...]

    @property
    def total_iterations(self) -> int:
        return sum(r.iterations for r in self.runs)

    @property
    def total_seconds(self) -> float:
        return sum(r.seconds for r in self.runs)


def _group_runs(runs: list[tuple[int, int]], min_gap: int) -> list[list[tuple[int, int]]]:
    """Split position-sorted runs into groups separated by at least min_gap
    valid samples; windows never reach across such a gap, so groups are
    independent."""
    by_pos = sorted(runs)
    groups: list[list[tuple[int, int]]] = []
    for run in by_pos:
        if groups and run[0] - groups[-1][-1][1] < min_gap:
            groups[-1].append(run)
        else:
            groups.append([run])
    return groups


def _extract_window(out: np.ndarray, lab: np.ndarray, i: int, n: int,
                    support: int) -> tuple[np.ndarray, np.ndarray]:
    center = window_center(n)
    lo = i - center
    f_win = np.zeros(n)
    lab_win = np.full(n, PAD, dtype=np.int8)
    s0 = max(lo, 0)
    s1 = min(lo + n, out.shape[0])
    if s1 > s0:
        f_win[s0 - lo : s1 - lo] = out[s0:s1]
        lab_win[s0 - lo : s1 - lo] = lab[s0:s1]
    # positions outside the extrapolation area carry no weight
    lab_win[: center - support] = PAD
    lab_win[center + support + 1 :] = PAD
    return f_win, lab_win


def _window_runner(engine: str):
    return _run_spectral if engine == "spectral" else (
        lambda f_win, weights, p: reference.run_window(f_win, weights.w, p))


def declip(f: AudioSignal, mask: SampleMask, p: FseParams,
           engine: str = "spectral", mode: str = "sample",
           workers: int = 1, timing: bool = False,
           ) -> tuple[AudioSignal, SampleMask, DeclipStats]:
    """Reconstruct every LOST sample of f in place of its clipped value.

    SUPPORT samples pass through bit-exactly. In the default "sample" mode
    each LOST index gets its own window and only the center estimate is
    written back before the index is relabeled RECONSTRUCTED; "run" mode
    writes a whole clipped run per window. Windows whose extrapolation area
    holds no usable sample are skipped and recorded in the stats, leaving
    those samples LOST.

    Independent groups of runs (separated by at least 2*support+1 valid
    samples) may be processed by several workers; the result is identical
    for any worker count.
    """
    validate_params(p)
    if len(f) != len(mask):
        raise ValueError("mask length must equal signal length")
    if engine not in ENGINES:
        raise ValueError(f"unknown engine {engine!r} (use one of {ENGINES})")
    if mode not in ("sample", "run"):
        raise ValueError(f"unknown mode {mode!r} (use 'sample' or 'run')")
    out = f.samples.copy()
    lab = mask.labels.copy()
    runs = _ordered_runs(lab)
    if not runs:
        return f.replace_samples(out), SampleMask(lab), DeclipStats(0, (), ())

    n = int(p.fft_size)
    support = int(p.support)
    runner = _window_runner(engine)
    process_run = _process_run_samplewise if mode == "sample" else _process_run_runwise

    def handle_group(group_runs: list[tuple[int, int]]):
        stats: list[RunStats] = []
        skipped: list[int] = []
        ordered = sorted(group_runs, key=lambda se: (se[1] - se[0], se[0]))
        for start, end in ordered:
            t0 = time.perf_counter() if timing else 0.0
            iters = process_run(out, lab, start, end, n, support, p, runner, skipped)
            dt = time.perf_counter() - t0 if timing else 0.0
            stats.append(RunStats(start, end - start, tuple(iters), dt))
        return stats, skipped

    groups = _group_runs(runs, 2 * support + 1)
    if workers > 1 and len(groups) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(handle_group, groups))
    else:
        results = [handle_group(g) for g in groups]

    run_stats: list[RunStats] = []
    skipped: list[int] = []
    for stats, skip in results:
        run_stats.extend(stats)
        skipped.extend(skip)
    run_stats.sort(key=lambda r: r.start)
    skipped.sort()
    reconstructed = int(np.count_nonzero(lab == RECONSTRUCTED)
                        - np.count_nonzero(mask.labels == RECONSTRUCTED))
    return (
        f.replace_samples(out),
        SampleMask(lab),
        DeclipStats(reconstructed, tuple(skipped), tuple(run_stats)),
    )


def _process_run_samplewise(out, lab, start, end, n, support, p, runner,
                            skipped) -> list[int]:
    iters: list[int] = []
    for i in _outside_in(start, end):
        f_win, lab_win = _extract_window(out, lab, i, n, support)
        try:
            weights = build_weights(lab_win, p)
        except NoSupportError:
            skipped.append(i)
            continue
        _, g_center, used, _, _ = runner(f_win, weights, p)
        out[i] = clamp_estimate(g_center, out[i], p)
        lab[i] = RECONSTRUCTED
        iters.append(used)
    return iters


def _process_run_runwise(out, lab, start, end, n, support, p, runner,
                         skipped) -> list[int]:
    """Fit one window per clipped run and write every covered sample from the
    synthesized model. Runs wider than the extrapolation area take several
    windows, each centered on the remaining unwritten span."""
    center = window_center(n)
    iters_list: list[int] = []
    pending = [i for i in range(start, end) if lab[i] == LOST]
    while pending:
        mid = pending[len(pending) // 2]
        f_win, lab_win = _extract_window(out, lab, mid, n, support)
        try:
            weights = build_weights(lab_win, p)
        except NoSupportError:
            skipped.extend(pending)
            break
        coeffs, _, iters, converged, _ = runner(f_win, weights, p)
        model = WindowModel(mid, _coeffs_to_dict(coeffs, n), iters, converged)
        g = synthesize(model, n).real
        lo = mid - center
        wrote = []
        for j in pending:
            k = j - lo
            if center - support <= k <= center + support:
                out[j] = clamp_estimate(float(g[k]), out[j], p)
                lab[j] = RECONSTRUCTED
                wrote.append(j)
        iters_list.append(iters)
        if not wrote:  # run lies outside its own window; cannot happen, guard
            skipped.extend(pending)
            break
        pending = [j for j in pending if lab[j] == LOST]
    return iters_list


def estimate_params(theta: float, base: FseParams | None = None) -> FseParams:
    """Parameters with the clip threshold set; helper for pipeline callers."""
    p = base if base is not None else FseParams()
    return replace(p, clip_threshold=float(theta))
