"""Monte Carlo estimators for the quantitative signatures of strictness.

mean_curve measures the martingale defect E[M_0 - M_t], tail_scan the
tail functional lambda * P(sup |M| >= lambda), and small_moment_scan a
divergence diagnostic for E[sup^alpha].  Estimates are bit-reproducible:
paths are streamed in fixed-size blocks by stream id, per-block sums use
numpy's pairwise summation, and blocks are combined with Kahan
compensation in index order, so the result is independent of the worker
count.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import ndtri

from .core import (
    EstimationFailedError,
    InvalidArgumentError,
    ProcessModel,
    SamplePath,
    TailQuantities,
    TimeGrid,
)
from .samplers import BLOCK_SIZE, sample_block

Z99 = float(ndtri(0.995))  # two-sided 99% normal quantile


def _set_worker_threads(threads: int) -> int:
    import numba

    n = max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return n


class _Kahan:
    """Compensated accumulator; used across blocks in fixed index order."""

    __slots__ = ("total", "comp")

    def __init__(self):
        self.total = 0.0
        self.comp = 0.0

    def add(self, v: float):
        y = v - self.comp
        t = self.total + y
        self.comp = (t - self.total) - y
        self.total = t


def path_sup(path: SamplePath) -> float:
    """Grid supremum of |M|; a lower bound for the continuous supremum."""
    return float(np.max(np.abs(path.values)))


def _iter_blocks(n_paths: int):
    for start in range(0, n_paths, BLOCK_SIZE):
        yield start, min(BLOCK_SIZE, n_paths - start)


@dataclass
class DefectCurve:
    """Per-time mean estimates and martingale defect with 99% intervals."""

    times: np.ndarray
    mean_est: np.ndarray
    stderr: np.ndarray
    defect_est: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    n_paths: int
    n_overflowed: np.ndarray
    m0_mean: float


@dataclass
class TailScan:
    """Empirical tail of the running supremum at one horizon."""

    lambdas: np.ndarray
    prob_est: np.ndarray
    stderr: np.ndarray
    lambda_prob: np.ndarray
    n_paths: int
    refinement: int  # grid steps used; suprema are grid maxima
    n_overflowed: int = 0


@dataclass
class MomentScan:
    """E[sup^alpha] estimates over nested sample sizes plus a growth verdict."""

    alpha: float
    sample_sizes: Sequence[int]
    estimates: np.ndarray
    verdict: str  # "stabilizing" | "suspected-divergent"
    n_overflowed: int = 0


def mean_curve(
    model: ProcessModel,
    grid: TimeGrid,
    times: Sequence[float],
    n_paths: int,
    seed: int,
    threads: int = 1,
) -> DefectCurve:
    """Sample means, standard errors and defects at the requested nodes.

    Overflowed paths are excluded from the means and counted per time.
    The defect is mean(M_0) minus the per-time mean; its 99% interval
    uses the normal approximation.
    """
    if n_paths < 100:
        raise InvalidArgumentError(f"need n_paths >= 100, got {n_paths}")
    times = list(times)
    if not times:
        raise InvalidArgumentError("need at least one time")
    _set_worker_threads(threads)
    idx = [grid.index_of(t) for t in times]
    track = [0] + idx  # node 0 provides mean(M_0)

    sums = [_Kahan() for _ in track]
    sumsq = [_Kahan() for _ in track]
    counts = [0] * len(track)
    for start, count in _iter_blocks(n_paths):
        blk = sample_block(model, grid, seed, start, count, threads)
        for slot, j in enumerate(track):
            valid = blk.overflow_at > j
            vals = blk.values[valid, j]
            sums[slot].add(float(np.sum(vals)))
            sumsq[slot].add(float(np.sum(vals * vals)))
            counts[slot] += int(vals.size)

    if counts[0] == 0:
        raise EstimationFailedError("all paths overflowed before the first node")
    m0_mean = sums[0].total / counts[0]

    means, errs, defects, los, his, n_over = [], [], [], [], [], []
    for slot, t in zip(range(1, len(track)), times):
        c = counts[slot]
        if c == 0:
            raise EstimationFailedError(f"all paths overflowed at t={t}")
        mean = sums[slot].total / c
        var = max(0.0, (sumsq[slot].total - c * mean * mean) / max(c - 1, 1))
        stderr = float(np.sqrt(var / c))
        defect = m0_mean - mean
        means.append(mean)
        errs.append(stderr)
        defects.append(defect)
        los.append(defect - Z99 * stderr)
        his.append(defect + Z99 * stderr)
        n_over.append(n_paths - c)
    return DefectCurve(
        times=np.array(times, dtype=np.float64),
        mean_est=np.array(means),
        stderr=np.array(errs),
        defect_est=np.array(defects),
        ci_low=np.array(los),
        ci_high=np.array(his),
        n_paths=n_paths,
        n_overflowed=np.array(n_over, dtype=np.int64),
        m0_mean=m0_mean,
    )


def tail_scan(
    model: ProcessModel,
    grid: TimeGrid,
    t: float,
    lambdas: Sequence[float],
    n_paths: int,
    seed: int,
    threads: int = 1,
) -> TailScan:
    """P(sup_{s<=t} |M_s| >= lambda) over the grid nodes, per lambda.

    The supremum is the grid maximum, a lower bound for the continuous
    supremum; refine the grid to tighten it.  Overflowed paths count as
    exceeding every lambda.
    """
    lambdas = np.asarray(list(lambdas), dtype=np.float64)
    if lambdas.size < 3 or np.any(np.diff(lambdas) <= 0.0):
        raise InvalidArgumentError("lambdas must be increasing with >= 3 entries")
    if n_paths < 10_000:
        raise InvalidArgumentError(f"need n_paths >= 10^4, got {n_paths}")
    _set_worker_threads(threads)
    jt = grid.index_of(t)

    hits = np.zeros(lambdas.size, dtype=np.int64)
    n_over = 0
    for start, count in _iter_blocks(n_paths):
        blk = sample_block(model, grid, seed, start, count, threads)
        sup = np.max(np.abs(blk.values[:, : jt + 1]), axis=1)
        n_over += int(np.count_nonzero(blk.overflow_at <= jt))
        for i, lam in enumerate(lambdas):
            hits[i] += int(np.count_nonzero(sup >= lam))

    prob = hits / float(n_paths)
    stderr = np.sqrt(prob * (1.0 - prob) / n_paths)
    return TailScan(
        lambdas=lambdas,
        prob_est=prob,
        stderr=stderr,
        lambda_prob=lambdas * prob,
        n_paths=n_paths,
        refinement=grid.n_steps,
        n_overflowed=n_over,
    )


def small_moment_scan(
    model: ProcessModel,
    grid: TimeGrid,
    t: float,
    alpha: float,
    sample_sizes: Sequence[int],
    seed: int,
    threads: int = 1,
) -> MomentScan:
    """E[(sup |M|)^alpha] over nested sample sizes.

    Size n_k reuses the first n_k streams, so the scan is monotone in
    information.  The verdict is a sampling diagnostic only: divergence
    cannot be proven by simulation, and the analytic classifier remains
    authoritative.  "suspected-divergent" requires >= 20% growth on each
    of the last two size steps.
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidArgumentError(f"alpha must lie in (0, 1), got {alpha}")
    sizes = [int(s) for s in sample_sizes]
    if len(sizes) < 4 or any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise InvalidArgumentError("sample_sizes must be increasing with >= 4 entries")
    _set_worker_threads(threads)
    jt = grid.index_of(t)

    kah = _Kahan()
    valid_count = 0
    n_over = 0
    estimates = []
    boundary = iter(sizes)
    next_b = next(boundary)
    pos = 0
    for start, count in _iter_blocks(sizes[-1]):
        blk = sample_block(model, grid, seed, start, count, threads)
        sup = np.max(np.abs(blk.values[:, : jt + 1]), axis=1)
        powered = np.power(sup, alpha)
        valid = blk.overflow_at > jt
        n_over += int(np.count_nonzero(~valid))
        lo = 0
        while next_b is not None and next_b <= pos + count:
            cut = next_b - pos
            seg = powered[lo:cut][valid[lo:cut]]
            kah.add(float(np.sum(seg)))
            valid_count += int(seg.size)
            if valid_count == 0:
                raise EstimationFailedError("all paths overflowed in the moment scan")
            estimates.append(kah.total / valid_count)
            lo = cut
            next_b = next(boundary, None)
        seg = powered[lo:][valid[lo:]]
        kah.add(float(np.sum(seg)))
        valid_count += int(seg.size)
        pos += count

    est = np.array(estimates)
    growing = est[-2] >= 1.2 * est[-3] and est[-1] >= 1.2 * est[-2]
    return MomentScan(
        alpha=alpha,
        sample_sizes=sizes,
        estimates=est,
        verdict="suspected-divergent" if growing else "stabilizing",
        n_overflowed=n_over,
    )


def tail_quantities(curve: DefectCurve, scan: TailScan, t: float) -> TailQuantities:
    """Bundle the defect and the largest-lambda tail value at time t."""
    where = np.flatnonzero(np.isclose(curve.times, t, rtol=0.0, atol=1e-12))
    if where.size == 0:
        raise InvalidArgumentError(f"t={t} is not a time of the defect curve")
    gamma = max(0.0, float(curve.defect_est[where[0]]))
    ell = max(0.0, float(scan.lambda_prob[-1]))
    return TailQuantities(ell=ell, gamma=gamma, t=t)
