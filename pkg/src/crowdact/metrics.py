"""Detection metric curves: precision-recall / AP and miss-rate-vs-FPPI /
log-average miss rate."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .assignment import MatchResult

DEFAULT_FPPI_LO = 0.01
DEFAULT_FPPI_HI = 100.0
DEFAULT_FPPI_POINTS = 9
MISS_RATE_FLOOR = 1e-10


@dataclass(frozen=True)
class PRCurve:
    """(recall, precision) points in score-rank order plus the truth count."""

    recalls: tuple[float, ...]
    precisions: tuple[float, ...]
    total_truths: int


@dataclass(frozen=True)
class MRFPPICurve:
    """(fppi, miss rate) points swept over every distinct detection score."""

    fppi: tuple[float, ...]
    miss_rates: tuple[float, ...]
    num_images: int
    total_truths: int


def _pooled(results: Iterable[MatchResult]) -> tuple[np.ndarray, np.ndarray, int]:
    scores: list[float] = []
    tp: list[bool] = []
    truths = 0
    for r in results:
        scores.extend(r.scores)
        tp.extend(r.is_tp)
        truths += r.num_truths
    if not scores:
        return np.empty(0), np.empty(0, dtype=bool), truths
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    return (
        np.array([scores[i] for i in order]),
        np.array([tp[i] for i in order]),
        truths,
    )


def pr_curve(results: Iterable[MatchResult], total_truths: int | None = None) -> PRCurve:
    """Pool per-frame match flags, rank by score, and cumulate into a PR curve.

    A zero-truth pool yields an empty curve (AP 0, flagged by the caller).
    """
    scores, tp, pooled_truths = _pooled(results)
    truths = pooled_truths if total_truths is None else total_truths
    if truths == 0 or scores.size == 0:
        return PRCurve((), (), truths)
    tp_cum = np.cumsum(tp)
    rank = np.arange(1, scores.size + 1)
    recalls = tp_cum / truths
    precisions = tp_cum / rank
    return PRCurve(tuple(map(float, recalls)), tuple(map(float, precisions)), truths)


def average_precision(c: PRCurve) -> float:
    """Area under the monotone (all-points interpolated) precision envelope."""
    if not c.recalls:
        return 0.0
    mrec = np.concatenate(([0.0], np.asarray(c.recalls), [1.0]))
    mpre = np.concatenate(([0.0], np.asarray(c.precisions), [0.0]))
    for i in range(mpre.size - 1, 0, -1):
        mpre[i - 1] = max(mpre[i - 1], mpre[i])
    steps = np.nonzero(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[steps + 1] - mrec[steps]) * mpre[steps + 1]))


def mr_fppi_curve(
    results: Iterable[MatchResult],
    num_images: int,
    total_truths: int | None = None,
) -> MRFPPICurve:
    """Sweep score thresholds at every distinct detection score.

    At each threshold: fppi = FP / num_images, miss rate = 1 - TP / truths.
    Raises ValueError when there are no ground-truth instances.
    """
    if num_images <= 0:
        raise ValueError("num_images must be positive")
    scores, tp, pooled_truths = _pooled(results)
    truths = pooled_truths if total_truths is None else total_truths
    if truths <= 0:
        raise ValueError("miss rate is undefined with zero ground-truth instances")
    if scores.size == 0:
        return MRFPPICurve((), (), num_images, truths)
    tp_cum = np.cumsum(tp)
    fp_cum = np.cumsum(~tp)
    # keep the last rank of each distinct score
    last = np.nonzero(np.append(scores[1:] != scores[:-1], True))[0]
    fppi = fp_cum[last] / num_images
    miss = 1.0 - tp_cum[last] / truths
    return MRFPPICurve(tuple(map(float, fppi)), tuple(map(float, miss)), num_images, truths)


def fppi_reference_points(
    lo: float = DEFAULT_FPPI_LO,
    hi: float = DEFAULT_FPPI_HI,
    num_points: int = DEFAULT_FPPI_POINTS,
) -> np.ndarray:
    """Log-spaced FPPI reference points used by the log-average miss rate."""
    if lo <= 0.0 or hi <= lo:
        raise ValueError("need 0 < fppi_lo < fppi_hi")
    if num_points < 2:
        raise ValueError("num_points must be at least 2")
    return np.logspace(math.log10(lo), math.log10(hi), num_points)


def log_average_miss_rate(
    c: MRFPPICurve,
    fppi_lo: float = DEFAULT_FPPI_LO,
    fppi_hi: float = DEFAULT_FPPI_HI,
    num_points: int = DEFAULT_FPPI_POINTS,
) -> float:
    """Geometric-mean style average of miss rates read at log-spaced FPPI
    reference points.

    At each reference f the miss rate is the minimum over sweep points with
    fppi <= f (1.0 if none).  Values are floored at 1e-10 before the log; an
    all-zero read-out is reported as exactly 0.
    """
    refs = fppi_reference_points(fppi_lo, fppi_hi, num_points)
    fppi = np.asarray(c.fppi)
    miss = np.asarray(c.miss_rates)
    picked = np.empty(refs.size)
    for k, f in enumerate(refs):
        mask = fppi <= f
        picked[k] = miss[mask].min() if mask.any() else 1.0
    if (picked == 0.0).all():
        return 0.0
    return float(np.exp(np.mean(np.log(np.maximum(picked, MISS_RATE_FLOOR)))))
