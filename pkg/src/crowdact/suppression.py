"""Greedy NMS and proposal-aware set NMS over per-frame detection sets.

Both variants keep the highest-scoring box and discard overlapping
candidates; set NMS additionally skips suppression between boxes that share
the same (present) proposal_id.  Suppression uses a strict comparison:
IoU > threshold suppresses, IoU == threshold survives.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import Box


@dataclass(frozen=True)
class SuppressionConfig:
    iou_threshold: float
    score_floor: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.iou_threshold <= 1.0:
            raise ValueError(f"iou_threshold outside [0, 1]: {self.iou_threshold}")
        if not 0.0 <= self.score_floor <= 1.0:
            raise ValueError(f"score_floor outside [0, 1]: {self.score_floor}")


def _suppress(dets: Sequence[Box], cfg: SuppressionConfig, respect_groups: bool) -> list[Box]:
    # Score floor first, then sort by score descending; ties keep input order.
    order = [(i, b) for i, b in enumerate(dets) if b.score >= cfg.score_floor]
    order.sort(key=lambda t: (-t[1].score, t[0]))
    boxes = [b for _, b in order]
    n = len(boxes)
    if n == 0:
        return []

    x1 = np.array([b.x1 for b in boxes])
    y1 = np.array([b.y1 for b in boxes])
    x2 = np.array([b.x2 for b in boxes])
    y2 = np.array([b.y2 for b in boxes])
    areas = (x2 - x1) * (y2 - y1)
    if respect_groups:
        grouped = np.array([b.proposal_id is not None for b in boxes])
        group = np.array(
            [b.proposal_id if b.proposal_id is not None else 0 for b in boxes]
        )

    alive = np.ones(n, dtype=bool)
    kept: list[Box] = []
    for i in range(n):
        if not alive[i]:
            continue
        kept.append(boxes[i])
        rest = np.nonzero(alive[i + 1 :])[0] + i + 1
        if rest.size == 0:
            continue
        iw = np.minimum(x2[i], x2[rest]) - np.maximum(x1[i], x1[rest])
        ih = np.minimum(y2[i], y2[rest]) - np.maximum(y1[i], y1[rest])
        inter = np.maximum(iw, 0.0) * np.maximum(ih, 0.0)
        union = areas[i] + areas[rest] - inter
        ovr = np.divide(inter, union, out=np.zeros_like(inter), where=union > 0.0)
        suppress = ovr > cfg.iou_threshold
        if respect_groups and grouped[i]:
            suppress &= ~(grouped[rest] & (group[rest] == group[i]))
        alive[rest[suppress]] = False
    return kept


def greedy_nms(dets: Sequence[Box], cfg: SuppressionConfig) -> list[Box]:
    """Standard greedy NMS; output is sorted by score descending."""
    return _suppress(dets, cfg, respect_groups=False)


def set_nms(dets: Sequence[Box], cfg: SuppressionConfig) -> list[Box]:
    """Greedy NMS that never suppresses boxes sharing a present proposal_id.

    Boxes without a proposal_id never trigger the skip rule, even against
    each other; with all-distinct ids the result equals `greedy_nms`.
    """
    return _suppress(dets, cfg, respect_groups=True)
