"""Chunked, reproducible Monte Carlo over the hidden variables.

Trials are split into fixed-size chunks; every trial draws its amplitudes
from a substream keyed by (seed, trial_index) and chunk results are folded
in chunk order, so the outcome is bit-identical for any worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .detection import intensity_batch, q_model
from .field import sample_vacuum_batch
from .scenarios import Scenario, apply_ops

__all__ = ["Estimate", "DetectionResult", "mc_detect", "mc_intensity_samples", "run_variants"]

CHUNK_TRIALS = 2048


@dataclass(frozen=True)
class Estimate:
    """A Monte Carlo estimate with its standard error."""

    value: float
    stderr: float


@dataclass(frozen=True)
class DetectionResult:
    """Singles/coincidence probabilities and intensity statistics of one run."""

    trials: int
    singles: dict
    coincidences: dict
    intensity_mean: dict
    intensity_std: dict
    intensity_corr: dict


@dataclass(frozen=True)
class _ChunkSums:
    n: int
    q_sum: np.ndarray       # (V, D)
    q2_sum: np.ndarray      # (V, D)
    i_sum: np.ndarray       # (V, D)
    i2_sum: np.ndarray      # (V, D)
    qq_sum: np.ndarray      # (V, P)
    qq2_sum: np.ndarray     # (V, P)
    ii_sum: np.ndarray      # (V, P)
    u_sum: np.ndarray       # (V*P,)
    uu_sum: np.ndarray      # (V*P, V*P)


def _chunk_worker(args) -> _ChunkSums:
    scenario, variant_ops, seed, start, stop = args
    amps0 = sample_vacuum_batch(scenario.n_modes, seed, range(start, stop))
    n_var = len(variant_ops)
    n_det = len(scenario.detector_specs)
    pairs = scenario.coincidences
    n_pair = len(pairs)
    b = stop - start
    q = np.empty((n_var, n_det, b))
    i = np.empty((n_var, n_det, b))
    forced = scenario.forced_responses or (None,) * n_det
    for v, ops in enumerate(variant_ops):
        amps = apply_ops(amps0, ops)
        for d, (spec, resp) in enumerate(zip(scenario.detector_specs, scenario.responses)):
            i[v, d] = intensity_batch(amps, resp)
            q[v, d] = q_model(i[v, d], spec) if forced[d] is None else forced[d]
    qq = np.empty((n_var, n_pair, b))
    for p, (a, c) in enumerate(pairs):
        qq[:, p, :] = q[:, a, :] * q[:, c, :]
    u = qq.reshape(n_var * n_pair, b)
    return _ChunkSums(
        n=b,
        q_sum=q.sum(axis=2), q2_sum=(q * q).sum(axis=2),
        i_sum=i.sum(axis=2), i2_sum=(i * i).sum(axis=2),
        qq_sum=qq.sum(axis=2), qq2_sum=(qq * qq).sum(axis=2),
        ii_sum=np.stack([(i[:, a, :] * i[:, c, :]).sum(axis=1) for a, c in pairs], axis=1)
        if n_pair else np.zeros((n_var, 0)),
        u_sum=u.sum(axis=1),
        uu_sum=u @ u.T,
    )


def _fold(chunks: list[_ChunkSums]) -> _ChunkSums:
    first = chunks[0]
    acc = {f: np.array(getattr(first, f), dtype=float, copy=True)
           for f in ("q_sum", "q2_sum", "i_sum", "i2_sum",
                     "qq_sum", "qq2_sum", "ii_sum", "u_sum", "uu_sum")}
    n = first.n
    for ch in chunks[1:]:
        n += ch.n
        for f in acc:
            acc[f] += getattr(ch, f)
    return _ChunkSums(n=n, **acc)


def default_workers() -> int:
    return max(1, int(os.environ.get("ZPFSIM_WORKERS", "1")))


def run_variants(scenario: Scenario, variant_ops, trials: int, seed: int,
                 workers: int | None = None) -> _ChunkSums:
    """Accumulated sufficient statistics for every op variant."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if workers is None:
        workers = default_workers()
    bounds = [(s, min(s + CHUNK_TRIALS, trials)) for s in range(0, trials, CHUNK_TRIALS)]
    args = [(scenario, tuple(variant_ops), seed, s, e) for s, e in bounds]
    if workers > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_chunk_worker, args))
    else:
        chunks = [_chunk_worker(a) for a in args]
    return _fold(chunks)


def _mean_se(total: float, total_sq: float, n: int) -> Estimate:
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0)
    if n > 1:
        var *= n / (n - 1)
    return Estimate(mean, math.sqrt(var / n))


def mc_detect(scenario: Scenario, trials: int, seed: int,
              workers: int | None = None) -> DetectionResult:
    """Direct Monte Carlo of singles and coincidences over the vacuum ensemble."""
    sums = run_variants(scenario, [scenario.ops], trials, seed, workers)
    n = sums.n
    names = scenario.detector_names
    singles = {nm: _mean_se(sums.q_sum[0, d], sums.q2_sum[0, d], n)
               for d, nm in enumerate(names)}
    imean, istd = {}, {}
    for d, nm in enumerate(names):
        est = _mean_se(sums.i_sum[0, d], sums.i2_sum[0, d], n)
        imean[nm] = est
        istd[nm] = est.stderr * math.sqrt(n)
    coinc, icorr = {}, {}
    for p, (a, c) in enumerate(scenario.coincidences):
        key = (names[a], names[c])
        coinc[key] = _mean_se(sums.qq_sum[0, p], sums.qq2_sum[0, p], n)
        cov = sums.ii_sum[0, p] / n - (sums.i_sum[0, a] / n) * (sums.i_sum[0, c] / n)
        sa = math.sqrt(max(sums.i2_sum[0, a] / n - (sums.i_sum[0, a] / n) ** 2, 0.0))
        sc = math.sqrt(max(sums.i2_sum[0, c] / n - (sums.i_sum[0, c] / n) ** 2, 0.0))
        icorr[key] = cov / (sa * sc) if sa > 0 and sc > 0 else 0.0
    return DetectionResult(
        trials=n, singles=singles, coincidences=coinc,
        intensity_mean=imean, intensity_std=istd, intensity_corr=icorr,
    )


def mc_intensity_samples(scenario: Scenario, trials: int, seed: int) -> dict:
    """Per-detector effective-intensity samples (single worker, test helper)."""
    out = {nm: np.empty(trials) for nm in scenario.detector_names}
    for start in range(0, trials, CHUNK_TRIALS):
        stop = min(start + CHUNK_TRIALS, trials)
        amps = apply_ops(sample_vacuum_batch(scenario.n_modes, seed, range(start, stop)),
                         scenario.ops)
        for nm, resp in zip(scenario.detector_names, scenario.responses):
            out[nm][start:stop] = intensity_batch(amps, resp)
    return out
