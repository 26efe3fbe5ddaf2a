"""Human-knowledge score re-weighting: scene-overlap rules and
group-to-alone score transfer for isolated persons."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError
from .geometry import Box, iou

FEET_FRACTION = 0.2


@dataclass(frozen=True)
class LabelMask:
    """Per-frame raster of scene-class ids with an id -> name table."""

    width: int
    height: int
    data: np.ndarray  # (height, width) uint8
    names: Mapping[int, str]

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError("mask dimensions must be positive")
        if self.data.shape != (self.height, self.width):
            raise ValueError(
                f"raster shape {self.data.shape} does not match {self.height}x{self.width}"
            )
        present = set(np.unique(self.data).tolist())
        missing = present - set(self.names)
        if missing:
            raise ValueError(f"raster ids missing from the name table: {sorted(missing)}")

    def id_of(self, name: str) -> int:
        for i, n in self.names.items():
            if n == name:
                return i
        raise ValueError(f"unknown scene label name: {name!r}")


@dataclass(frozen=True)
class SceneRule:
    """Multiply one action's score by damp + (boost - damp) * scene overlap.

    `feet_only` restricts the overlap measurement to the bottom 20% of the
    person box (the feet region).
    """

    scene: str
    action: str
    boost: float
    damp: float
    feet_only: bool = False

    def __post_init__(self) -> None:
        if not (self.boost >= 1.0 >= self.damp > 0.0):
            raise ValueError(
                f"need boost >= 1 >= damp > 0, got boost={self.boost} damp={self.damp}"
            )


@dataclass(frozen=True)
class PairRule:
    """Transfer score mass from a 'together' action to its 'alone' twin when
    the person has no close neighbor."""

    together: str
    alone: str
    tau: float
    beta: float

    def __post_init__(self) -> None:
        if self.together == self.alone:
            raise ValueError("pair must reference two distinct classes")
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError(f"tau outside [0, 1]: {self.tau}")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta outside [0, 1]: {self.beta}")


def feet_region(b: Box) -> Box:
    """Bottom 20% slice of a box, used by feet-only scene rules."""
    return Box(b.x1, b.y2 - FEET_FRACTION * b.height, b.x2, b.y2)


def scene_overlap_ratio(b: Box, m: LabelMask, label: int) -> float:
    """Fraction of integer pixel centers inside the (clipped) box whose mask
    id equals `label`; 0.0 for an empty clipped box."""
    if label not in m.names:
        raise ValueError(f"unknown scene label id: {label}")
    x_lo = int(np.ceil(max(b.x1, 0.0)))
    x_hi = int(np.floor(min(b.x2, m.width - 1.0)))
    y_lo = int(np.ceil(max(b.y1, 0.0)))
    y_hi = int(np.floor(min(b.y2, m.height - 1.0)))
    if x_lo > x_hi or y_lo > y_hi:
        return 0.0
    window = m.data[y_lo : y_hi + 1, x_lo : x_hi + 1]
    return float(np.count_nonzero(window == label)) / window.size


def scene_reweight(
    scores: Sequence[float],
    ratios: Sequence[float],
    rules: Sequence[SceneRule],
    class_ids: Mapping[str, int],
) -> tuple[float, ...]:
    """Apply scene rules in order; each scales its target class score by
    damp + (boost - damp) * ratio, clamped to [0, 1]."""
    if len(ratios) != len(rules):
        raise ValueError("need one overlap ratio per rule")
    out = list(map(float, scores))
    for rule, ratio in zip(rules, ratios):
        if not 0.0 <= ratio <= 1.0:
            raise ValueError(f"overlap ratio outside [0, 1]: {ratio}")
        if rule.action not in class_ids:
            raise ValueError(f"rule references unknown action class: {rule.action!r}")
        idx = class_ids[rule.action]
        factor = rule.damp + (rule.boost - rule.damp) * ratio
        out[idx] = min(1.0, max(0.0, out[idx] * factor))
    return tuple(out)


def max_neighbor_iou(boxes: Sequence[Box], idx: int) -> float:
    """Max IoU between box `idx` and every other box in the frame."""
    if not 0 <= idx < len(boxes):
        raise ValueError(f"index {idx} out of range for {len(boxes)} boxes")
    best = 0.0
    for j, other in enumerate(boxes):
        if j != idx:
            best = max(best, iou(boxes[idx], other))
    return best


def group_alone_reweight(
    scores: Sequence[float],
    max_iou: float,
    pairs: Sequence[tuple[str, str]],
    tau: float,
    beta: float,
    class_ids: Mapping[str, int],
) -> tuple[float, ...]:
    """When max_iou < tau, move beta of each 'together' score onto its
    'alone' twin.

    The transferred mass is capped at the alone class's headroom (1 - score)
    so the pair sum is preserved exactly and no score leaves [0, 1].
    """
    seen: set[str] = set()
    for tog, alone in pairs:
        if tog == alone or tog in seen or alone in seen:
            raise ValueError("pairs must reference disjoint classes")
        seen.update((tog, alone))
        for name in (tog, alone):
            if name not in class_ids:
                raise ValueError(f"pair references unknown action class: {name!r}")
    out = list(map(float, scores))
    if max_iou >= tau:
        return tuple(out)
    for tog, alone in pairs:
        ti, ai = class_ids[tog], class_ids[alone]
        moved = min(beta * out[ti], 1.0 - out[ai])
        out[ti] -= moved
        out[ai] += moved
    return tuple(out)


def parse_rules(text: str) -> tuple[list[SceneRule], list[PairRule]]:
    """Parse a rules file: lines of

        scene=<name> action=<name> boost=<f> damp=<f> [feet=<0|1>]
        pair together=<name> alone=<name> tau=<f> beta=<f>

    Blank lines and '#' comments are ignored.  Pair rules must reference
    disjoint classes across the whole file.
    """
    scene_rules: list[SceneRule] = []
    pair_rules: list[PairRule] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        try:
            if tokens[0].startswith("scene="):
                kv = _keyvalues(tokens, {"scene", "action", "boost", "damp", "feet"})
                scene_rules.append(
                    SceneRule(
                        scene=kv["scene"],
                        action=kv["action"],
                        boost=float(kv["boost"]),
                        damp=float(kv["damp"]),
                        feet_only=kv.get("feet", "0") == "1",
                    )
                )
            elif tokens[0] == "pair":
                kv = _keyvalues(tokens[1:], {"together", "alone", "tau", "beta"})
                pair_rules.append(
                    PairRule(
                        together=kv["together"],
                        alone=kv["alone"],
                        tau=float(kv["tau"]),
                        beta=float(kv["beta"]),
                    )
                )
            else:
                raise ValueError(f"unrecognized rule kind: {tokens[0]!r}")
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"rules line {lineno}: {exc}") from exc
    used: set[str] = set()
    for rule in pair_rules:
        if rule.together in used or rule.alone in used:
            raise ConfigError(
                f"pair rules share a class: {rule.together!r}/{rule.alone!r}"
            )
        used.update((rule.together, rule.alone))
    return scene_rules, pair_rules


def _keyvalues(tokens: Sequence[str], allowed: set[str]) -> dict[str, str]:
    kv: dict[str, str] = {}
    for tok in tokens:
        if "=" not in tok:
            raise ValueError(f"expected key=value, got {tok!r}")
        key, value = tok.split("=", 1)
        if key not in allowed:
            raise ValueError(f"unknown key {key!r}")
        if key in kv:
            raise ValueError(f"duplicate key {key!r}")
        kv[key] = value
    missing = {k for k in allowed if k != "feet"} - set(kv)
    if missing:
        raise KeyError(f"missing keys: {sorted(missing)}")
    return kv
