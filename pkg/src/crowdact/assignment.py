"""Min-cost assignment, set-distance matching between prediction and truth
box sets, and the greedy score-ordered matching used by evaluation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import Box, iou

DEFAULT_MAX_ROWS = 512


def _solve_lap(cost: np.ndarray) -> np.ndarray:
    """Shortest-augmenting-path assignment for an n x m matrix with n <= m.

    Returns col_for_row (length n).  Exact for finite float costs.
    """
    n, m = cost.shape
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    p = np.zeros(m + 1, dtype=np.intp)  # row (1-based) assigned to each col; 0 = free
    way = np.zeros(m + 1, dtype=np.intp)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(m + 1, np.inf)
        used = np.zeros(m + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            cur = cost[i0 - 1, :] - u[i0] - v[1:]
            better = (cur < minv[1:]) & ~used[1:]
            minv[1:][better] = cur[better]
            way[1:][better] = j0
            masked = np.where(used[1:], np.inf, minv[1:])
            j1 = int(np.argmin(masked)) + 1
            delta = masked[j1 - 1]
            u[p[used]] += delta
            v[used] -= delta
            minv[~used] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    col_for_row = np.zeros(n, dtype=np.intp)
    for j in range(1, m + 1):
        if p[j] > 0:
            col_for_row[p[j] - 1] = j - 1
    return col_for_row


def min_cost_assignment(
    cost, max_rows: int = DEFAULT_MAX_ROWS
) -> tuple[list[tuple[int, int]], float]:
    """Exact minimum-cost one-to-one assignment of min(rows, cols) pairs.

    Returns (pairs sorted by row, total cost).  Rejects non-finite or
    negative entries and matrices with more than `max_rows` rows.
    """
    c = np.asarray(cost, dtype=np.float64)
    if c.ndim != 2:
        raise ValueError(f"cost matrix must be 2-D, got shape {c.shape}")
    rows, cols = c.shape
    if rows > max_rows:
        raise ValueError(f"cost matrix has {rows} rows; limit is {max_rows}")
    if rows == 0 or cols == 0:
        return [], 0.0
    if not np.isfinite(c).all():
        raise ValueError("cost matrix contains non-finite entries")
    if (c < 0.0).any():
        raise ValueError("cost matrix contains negative entries")

    if rows <= cols:
        col_for_row = _solve_lap(c)
        pairs = [(r, int(col_for_row[r])) for r in range(rows)]
    else:
        row_for_col = _solve_lap(c.T)
        pairs = sorted((int(row_for_col[j]), j) for j in range(cols))
    total = float(sum(c[r, j] for r, j in pairs))
    return pairs, total


@dataclass(frozen=True)
class EmdCostConfig:
    """Pair-cost knobs for the set distance.

    Real pair: (1 - iou) + lambda_score * (1 - prediction score).
    Prediction left unmatched: its score.  Truth left unmatched: miss_penalty.
    """

    lambda_score: float = 1.0
    miss_penalty: float = 1.0

    def __post_init__(self) -> None:
        if self.lambda_score < 0.0:
            raise ValueError("lambda_score must be non-negative")
        if self.miss_penalty < 0.0:
            raise ValueError("miss_penalty must be non-negative")


def emd_set_distance(
    preds: Sequence[Box],
    truths: Sequence[Box],
    cost: EmdCostConfig = EmdCostConfig(),
) -> tuple[float, list[tuple[int, int]]]:
    """Minimum total pair cost between a prediction set and a truth set.

    The smaller set is padded with dummy entries so the assignment is
    one-to-one; the returned matching contains real pairs only.
    """
    n, m = len(preds), len(truths)
    if n == 0 and m == 0:
        return 0.0, []
    k = max(n, m)
    c = np.zeros((k, k))
    for i, p in enumerate(preds):
        for j, t in enumerate(truths):
            c[i, j] = (1.0 - iou(p, t)) + cost.lambda_score * (1.0 - p.score)
        c[i, m:] = p.score  # dummy truths, present only when n > m
    c[n:, :m] = cost.miss_penalty  # dummy predictions, present only when m > n
    pairs, total = min_cost_assignment(c, max_rows=max(k, DEFAULT_MAX_ROWS))
    real = [(i, j) for i, j in pairs if i < n and j < m]
    return total, real


@dataclass(frozen=True)
class MatchResult:
    """Per-detection TP/FP flags for one frame and one class.

    Entries follow detection input order; `scores` repeats the detection
    scores so results can be pooled across frames for ranking.
    """

    scores: tuple[float, ...]
    is_tp: tuple[bool, ...]
    matched_truth: tuple[int | None, ...]
    num_unmatched_truths: int

    @property
    def num_truths(self) -> int:
        return sum(self.is_tp) + self.num_unmatched_truths


def greedy_score_match(
    dets: Sequence[Box],
    truths: Sequence[Box],
    iou_threshold: float,
    scores: Sequence[float] | None = None,
) -> MatchResult:
    """Match detections against truths in descending score order.

    Each detection takes the highest-IoU still-unmatched truth with
    IoU >= iou_threshold, else it is a false positive.  Score ties keep
    input order; IoU ties take the lowest truth index.  `scores` overrides
    the boxes' own scores (used for per-class action scores).
    """
    n, m = len(dets), len(truths)
    det_scores = [float(s) for s in scores] if scores is not None else [b.score for b in dets]
    if scores is not None and len(det_scores) != n:
        raise ValueError("scores length must match detections")

    is_tp = [False] * n
    matched: list[int | None] = [None] * n
    if m:
        tx1 = np.array([t.x1 for t in truths])
        ty1 = np.array([t.y1 for t in truths])
        tx2 = np.array([t.x2 for t in truths])
        ty2 = np.array([t.y2 for t in truths])
        tarea = (tx2 - tx1) * (ty2 - ty1)
        free = np.ones(m, dtype=bool)
        for i in sorted(range(n), key=lambda i: (-det_scores[i], i)):
            if not free.any():
                break
            b = dets[i]
            iw = np.minimum(b.x2, tx2) - np.maximum(b.x1, tx1)
            ih = np.minimum(b.y2, ty2) - np.maximum(b.y1, ty1)
            inter = np.maximum(iw, 0.0) * np.maximum(ih, 0.0)
            union = b.area + tarea - inter
            ious = np.divide(inter, union, out=np.zeros_like(inter), where=union > 0.0)
            ious[~free] = -1.0
            j = int(np.argmax(ious))
            if ious[j] >= iou_threshold:
                is_tp[i] = True
                matched[i] = j
                free[j] = False
    return MatchResult(
        scores=tuple(det_scores),
        is_tp=tuple(is_tp),
        matched_truth=tuple(matched),
        num_unmatched_truths=m - sum(is_tp),
    )
