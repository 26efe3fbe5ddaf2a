"""Box arithmetic and the deterministic coordinate transforms used in
preprocessing: IoU, horizontal flips, resize-and-pad planning, and seeded
box jittering.

Coordinates are corner-based (x1, y1, x2, y2) continuous values; area is
(x2 - x1) * (y2 - y1) with no +1 pixel convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Any, Mapping

from .rand import uniforms


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle with score, class label, and optional tags.

    `proposal_id` groups boxes emitted by the same detector proposal.
    `person_id` / `ignore` / `actions` are carried for ground-truth and
    action-recognition records; plain geometry never touches them.
    """

    x1: float
    y1: float
    x2: float
    y2: float
    score: float = 1.0
    label: int = 0
    proposal_id: int | None = None
    person_id: int | None = None
    ignore: bool = False
    actions: tuple[float, ...] | None = None
    extra: Mapping[str, Any] | None = None

    def __post_init__(self) -> None:
        if not (self.x1 <= self.x2 and self.y1 <= self.y2):
            raise ValueError(
                f"invalid box corners ({self.x1}, {self.y1}, {self.x2}, {self.y2})"
            )
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score outside [0, 1]: {self.score}")

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height


@dataclass(frozen=True)
class TransformPlan:
    """Resize + pad (+ optional horizontal flip) bookkeeping for one frame."""

    scale: float
    scaled_w: int
    scaled_h: int
    padded_w: int
    padded_h: int
    flipped: bool = False

    def __post_init__(self) -> None:
        if self.scale <= 0.0:
            raise ValueError(f"scale must be positive: {self.scale}")
        if self.scaled_w > self.padded_w or self.scaled_h > self.padded_h:
            raise ValueError("scaled dimensions exceed padded dimensions")


def iou(a: Box, b: Box) -> float:
    """Intersection-over-union; 0.0 whenever the union has zero area."""
    iw = min(a.x2, b.x2) - max(a.x1, b.x1)
    ih = min(a.y2, b.y2) - max(a.y1, b.y1)
    if iw <= 0.0 or ih <= 0.0:
        inter = 0.0
    else:
        inter = iw * ih
    union = a.area + b.area - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def hflip_box(b: Box, frame_width: float) -> Box:
    """Mirror a box across the vertical center line of a frame."""
    if b.x1 < 0.0 or b.x2 > frame_width:
        raise ValueError(
            f"box x-range [{b.x1}, {b.x2}] outside frame width {frame_width}"
        )
    return replace(b, x1=frame_width - b.x2, x2=frame_width - b.x1)


def _round_half_up(x: float) -> int:
    # round-half-away-from-zero; inputs here are always positive
    return int(math.floor(x + 0.5))


PAD_FACTOR = 2.5


def resize_pad_plan(
    frame_w: int, frame_h: int, target_short: int, flipped: bool = False
) -> TransformPlan:
    """Plan the scale that pins the shorter side to `target_short` and pads
    the longer side to 2.5x the shorter one.

    Raises ValueError when the frame aspect ratio exceeds the padded bound.
    """
    if frame_w <= 0 or frame_h <= 0 or target_short <= 0:
        raise ValueError("frame dimensions and target_short must be positive")
    scale = target_short / min(frame_w, frame_h)
    pad_long = _round_half_up(PAD_FACTOR * target_short)
    if frame_w >= frame_h:
        scaled_long = _round_half_up(scale * frame_w)
        if scaled_long > pad_long:
            raise ValueError(
                f"scaled width {scaled_long} exceeds padded width {pad_long}"
            )
        return TransformPlan(scale, scaled_long, target_short, pad_long, target_short, flipped)
    scaled_long = _round_half_up(scale * frame_h)
    if scaled_long > pad_long:
        raise ValueError(f"scaled height {scaled_long} exceeds padded height {pad_long}")
    return TransformPlan(scale, target_short, scaled_long, target_short, pad_long, flipped)


def apply_plan(b: Box, p: TransformPlan) -> Box:
    """Map a box from original-frame space into padded-model space."""
    x1, x2 = b.x1 * p.scale, b.x2 * p.scale
    y1, y2 = b.y1 * p.scale, b.y2 * p.scale
    if p.flipped:
        x1, x2 = p.padded_w - x2, p.padded_w - x1
    return replace(b, x1=x1, y1=y1, x2=x2, y2=y2)


_INVERT_TOL = 1e-6


def invert_plan(b: Box, p: TransformPlan) -> Box:
    """Map a box from padded-model space back to original-frame space.

    Exact inverse of `apply_plan`: round trips agree within 1e-9.
    """
    if (
        b.x1 < -_INVERT_TOL
        or b.y1 < -_INVERT_TOL
        or b.x2 > p.padded_w + _INVERT_TOL
        or b.y2 > p.padded_h + _INVERT_TOL
    ):
        raise ValueError("box lies outside the padded dimensions of the plan")
    x1, x2 = b.x1, b.x2
    if p.flipped:
        x1, x2 = p.padded_w - x2, p.padded_w - x1
    return replace(
        b, x1=x1 / p.scale, y1=b.y1 / p.scale, x2=x2 / p.scale, y2=b.y2 / p.scale
    )


def jitter_box(b: Box, ratio: float, seed: int) -> Box:
    """Shift each edge by a seeded uniform offset in [-ratio, +ratio] times
    the corresponding side length.  Same (box, ratio, seed) -> same output.

    Draws come in fixed edge order (x1, y1, x2, y2) from the counter-based
    stream, so results are reproducible across platforms.
    """
    if not 0.0 <= ratio <= 1.0:
        raise ValueError(f"ratio outside [0, 1]: {ratio}")
    if ratio == 0.0:
        return b
    u = uniforms(seed, 4)
    w, h = b.width, b.height
    x1 = b.x1 + (2.0 * u[0] - 1.0) * ratio * w
    y1 = b.y1 + (2.0 * u[1] - 1.0) * ratio * h
    x2 = b.x2 + (2.0 * u[2] - 1.0) * ratio * w
    y2 = b.y2 + (2.0 * u[3] - 1.0) * ratio * h
    return replace(
        b, x1=min(x1, x2), y1=min(y1, y2), x2=max(x1, x2), y2=max(y1, y2)
    )
