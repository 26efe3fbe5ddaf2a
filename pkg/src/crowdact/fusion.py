"""Test-time-augmentation score averaging and two-model detection fusion."""

from __future__ import annotations

from dataclasses import replace
from typing import Sequence

import numpy as np

from .formats import DetectionRecord
from .geometry import Box, iou


def average_scores(
    vectors: Sequence[Sequence[float]], weights: Sequence[float] | None = None
) -> tuple[float, ...]:
    """Weighted arithmetic mean per class; weights are normalized to sum 1."""
    if not vectors:
        raise ValueError("need at least one score vector")
    length = len(vectors[0])
    for v in vectors:
        if len(v) != length:
            raise ValueError("score vectors must all have the same length")
    if weights is None:
        weights = [1.0] * len(vectors)
    if len(weights) != len(vectors):
        raise ValueError("need one weight per vector")
    w = np.asarray(weights, dtype=np.float64)
    if (w < 0.0).any():
        raise ValueError("weights must be non-negative")
    total = w.sum()
    if total <= 0.0:
        raise ValueError("weights must not all be zero")
    stacked = np.asarray(vectors, dtype=np.float64)
    return tuple(map(float, (w / total) @ stacked))


def _merge_pair(a: Box, b: Box, wa: float, wb: float) -> Box:
    s = wa + wb
    actions: tuple[float, ...] | None
    if a.actions is not None and b.actions is not None:
        actions = average_scores([a.actions, b.actions], [wa, wb])
    else:
        actions = a.actions if a.actions is not None else b.actions
    return Box(
        x1=(wa * a.x1 + wb * b.x1) / s,
        y1=(wa * a.y1 + wb * b.y1) / s,
        x2=(wa * a.x2 + wb * b.x2) / s,
        y2=(wa * a.y2 + wb * b.y2) / s,
        score=(wa * a.score + wb * b.score) / s,
        label=a.label,
        actions=actions,
    )


def fuse_detections(
    a: DetectionRecord,
    b: DetectionRecord,
    weights: tuple[float, float] = (1.0, 1.0),
    match_iou: float = 0.5,
) -> DetectionRecord:
    """Fuse two detectors' outputs for one frame.

    Pairs of same-class boxes are matched greedily by descending IoU (only
    pairs with IoU >= match_iou are eligible); matched pairs merge into a
    weighted-average box, unmatched boxes pass through with their score
    scaled by their model's normalized weight.  Output is score-descending.
    """
    if (a.video, a.frame) != (b.video, b.frame):
        raise ValueError(
            f"frame key mismatch: {(a.video, a.frame)} vs {(b.video, b.frame)}"
        )
    wa, wb = weights
    if wa < 0.0 or wb < 0.0 or wa + wb <= 0.0:
        raise ValueError("weights must be non-negative and not both zero")

    candidates = []
    for i, ba in enumerate(a.boxes):
        for j, bb in enumerate(b.boxes):
            if ba.label != bb.label:
                continue
            v = iou(ba, bb)
            if v >= match_iou:
                candidates.append((-v, i, j))
    candidates.sort()
    used_a = set()
    used_b = set()
    fused: list[Box] = []
    for _, i, j in candidates:
        if i in used_a or j in used_b:
            continue
        used_a.add(i)
        used_b.add(j)
        fused.append(_merge_pair(a.boxes[i], b.boxes[j], wa, wb))
    for i, ba in enumerate(a.boxes):
        if i not in used_a:
            fused.append(replace(ba, score=ba.score * wa / (wa + wb)))
    for j, bb in enumerate(b.boxes):
        if j not in used_b:
            fused.append(replace(bb, score=bb.score * wb / (wa + wb)))
    fused.sort(key=lambda x: (-x.score, x.x1, x.y1, x.x2, x.y2, x.label))
    return DetectionRecord(video=a.video, frame=a.frame, boxes=tuple(fused))


def fuse_corpus(
    a: Sequence[DetectionRecord],
    b: Sequence[DetectionRecord],
    weights: tuple[float, float] = (1.0, 1.0),
    match_iou: float = 0.5,
) -> list[DetectionRecord]:
    """Fuse two corpora frame-by-frame over the union of their frame keys.

    A frame missing from one model is treated as an empty detection set, so
    the other model's boxes pass through down-weighted.
    """
    index_a = {(r.video, r.frame): r for r in a}
    index_b = {(r.video, r.frame): r for r in b}
    keys = sorted(set(index_a) | set(index_b))
    out = []
    for key in keys:
        empty = DetectionRecord(video=key[0], frame=key[1], boxes=())
        out.append(
            fuse_detections(index_a.get(key, empty), index_b.get(key, empty), weights, match_iou)
        )
    return out
