"""Data formats: line-delimited detection/truth records, action label sets,
P5 label-mask rasters, and the corpus split utility.

Records are UTF-8 JSON objects, one per line.  Floating values are written
with 6 decimal places; unknown fields survive a read/write round trip.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, InputError
from .geometry import Box
from .postproc import LabelMask

_BOX_KEYS = ("x1", "y1", "x2", "y2", "score", "label")
_BOX_OPTIONAL = ("proposal_id", "person_id", "ignore", "actions")
_RECORD_KEYS = ("video", "frame", "boxes")


@dataclass(frozen=True)
class DetectionRecord:
    """All boxes (predicted or ground-truth) for one (video, frame)."""

    video: str
    frame: int
    boxes: tuple[Box, ...]
    extra: Mapping[str, Any] | None = None

    def __post_init__(self) -> None:
        if self.frame < 0:
            raise ValueError(f"frame must be non-negative: {self.frame}")

    @property
    def key(self) -> tuple[str, int]:
        return (self.video, self.frame)


@dataclass(frozen=True)
class ActionLabelSet:
    """Ordered action class names (index = class id) plus together/alone pairs."""

    classes: tuple[str, ...]
    pairs: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        if len(set(self.classes)) != len(self.classes):
            raise ValueError("class names must be unique")
        used: set[str] = set()
        for tog, alone in self.pairs:
            for name in (tog, alone):
                if name not in self.classes:
                    raise ValueError(f"pair references unknown class: {name!r}")
            if tog == alone or tog in used or alone in used:
                raise ValueError("pairs must reference disjoint classes")
            used.update((tog, alone))

    @property
    def class_ids(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.classes)}

    def __len__(self) -> int:
        return len(self.classes)


# ---------------------------------------------------------------------------
# JSON-lines serialization with fixed float formatting


def _fmt(value: Any) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.6f}"
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    if isinstance(value, Mapping):
        items = sorted(value.items())
        return "{" + ", ".join(f"{json.dumps(k)}: {_fmt(v)}" for k, v in items) + "}"
    raise InputError(f"cannot serialize value of type {type(value).__name__}")


def _box_fields(b: Box) -> list[tuple[str, Any]]:
    fields: list[tuple[str, Any]] = [
        ("x1", float(b.x1)),
        ("y1", float(b.y1)),
        ("x2", float(b.x2)),
        ("y2", float(b.y2)),
        ("score", float(b.score)),
        ("label", b.label),
    ]
    if b.proposal_id is not None:
        fields.append(("proposal_id", b.proposal_id))
    if b.person_id is not None:
        fields.append(("person_id", b.person_id))
    if b.ignore:
        fields.append(("ignore", True))
    if b.actions is not None:
        fields.append(("actions", [float(v) for v in b.actions]))
    if b.extra:
        fields.extend(sorted(b.extra.items()))
    return fields


def dumps_record(record: DetectionRecord) -> str:
    boxes = ", ".join(
        "{" + ", ".join(f"{json.dumps(k)}: {_fmt(v)}" for k, v in _box_fields(b)) + "}"
        for b in record.boxes
    )
    parts = [
        f'"video": {json.dumps(record.video, ensure_ascii=False)}',
        f'"frame": {record.frame}',
        f'"boxes": [{boxes}]',
    ]
    if record.extra:
        parts.extend(f"{json.dumps(k)}: {_fmt(v)}" for k, v in sorted(record.extra.items()))
    return "{" + ", ".join(parts) + "}"


def _require_number(obj: Mapping[str, Any], key: str) -> float:
    v = obj.get(key)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValueError(f"box field {key!r} must be a number")
    return float(v)


def _parse_box(obj: Any) -> Box:
    if not isinstance(obj, dict):
        raise ValueError("box entries must be objects")
    x1 = _require_number(obj, "x1")
    y1 = _require_number(obj, "y1")
    x2 = _require_number(obj, "x2")
    y2 = _require_number(obj, "y2")
    score = _require_number(obj, "score") if "score" in obj else 1.0
    label = obj.get("label", 0)
    if isinstance(label, bool) or not isinstance(label, int):
        raise ValueError("box field 'label' must be an integer")
    proposal_id = obj.get("proposal_id")
    if proposal_id is not None and (isinstance(proposal_id, bool) or not isinstance(proposal_id, int)):
        raise ValueError("box field 'proposal_id' must be an integer")
    person_id = obj.get("person_id")
    if person_id is not None and (isinstance(person_id, bool) or not isinstance(person_id, int)):
        raise ValueError("box field 'person_id' must be an integer")
    ignore = obj.get("ignore", False)
    if not isinstance(ignore, bool):
        raise ValueError("box field 'ignore' must be a boolean")
    actions = None
    if obj.get("actions") is not None:
        raw = obj["actions"]
        if not isinstance(raw, list) or not raw:
            raise ValueError("box field 'actions' must be a non-empty array")
        actions = []
        for v in raw:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ValueError("action scores must be numbers")
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"action score outside [0, 1]: {v}")
            actions.append(float(v))
        actions = tuple(actions)
    known = set(_BOX_KEYS) | set(_BOX_OPTIONAL)
    extra = {k: v for k, v in obj.items() if k not in known}
    return Box(
        x1=x1,
        y1=y1,
        x2=x2,
        y2=y2,
        score=score,
        label=label,
        proposal_id=proposal_id,
        person_id=person_id,
        ignore=ignore,
        actions=actions,
        extra=extra or None,
    )


def loads_record(line: str) -> DetectionRecord:
    obj = json.loads(line)
    if not isinstance(obj, dict):
        raise ValueError("record must be a JSON object")
    video = obj.get("video")
    if not isinstance(video, str) or not video:
        raise ValueError("record field 'video' must be a non-empty string")
    frame = obj.get("frame")
    if isinstance(frame, bool) or not isinstance(frame, int) or frame < 0:
        raise ValueError("record field 'frame' must be a non-negative integer")
    raw_boxes = obj.get("boxes")
    if not isinstance(raw_boxes, list):
        raise ValueError("record field 'boxes' must be an array")
    boxes = tuple(_parse_box(b) for b in raw_boxes)
    extra = {k: v for k, v in obj.items() if k not in _RECORD_KEYS}
    return DetectionRecord(video=video, frame=frame, boxes=boxes, extra=extra or None)


def read_detections(path: str | os.PathLike) -> list[DetectionRecord]:
    """Read a line-delimited corpus; malformed lines and duplicate
    (video, frame) keys raise InputError naming the line."""
    records: list[DetectionRecord] = []
    seen: dict[tuple[str, int], int] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = loads_record(line)
            except (json.JSONDecodeError, ValueError) as exc:
                raise InputError(f"{path}: line {lineno}: {exc}") from exc
            if record.key in seen:
                raise InputError(
                    f"{path}: line {lineno}: duplicate (video, frame) "
                    f"{record.key} (first seen on line {seen[record.key]})"
                )
            seen[record.key] = lineno
            records.append(record)
    return records


def write_detections(records: Iterable[DetectionRecord], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(dumps_record(record))
            fh.write("\n")


def corpus_index(records: Sequence[DetectionRecord]) -> dict[tuple[str, int], DetectionRecord]:
    index: dict[tuple[str, int], DetectionRecord] = {}
    for r in records:
        if r.key in index:
            raise InputError(f"duplicate (video, frame) {r.key}")
        index[r.key] = r
    return index


def split_by_video(
    records: Sequence[DetectionRecord], val_ids: Sequence[str]
) -> tuple[list[DetectionRecord], list[DetectionRecord]]:
    """Partition a corpus into (train, val) by video id; every frame lands in
    exactly one side.  Unknown val ids raise InputError."""
    present = {r.video for r in records}
    unknown = [v for v in val_ids if v not in present]
    if unknown:
        raise InputError(f"unknown video ids in split: {unknown}")
    val_set = set(val_ids)
    train = [r for r in records if r.video not in val_set]
    val = [r for r in records if r.video in val_set]
    return train, val


# ---------------------------------------------------------------------------
# Action label-set config


def parse_labels(text: str) -> ActionLabelSet:
    """Parse a label-set config: `class=<id>:<name>` lines (ids must cover
    0..N-1) plus optional `pair=<together>:<alone>` lines."""
    classes: dict[int, str] = {}
    pairs: list[tuple[str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            key, value = line.split("=", 1)
            if key == "class":
                ident, name = value.split(":", 1)
                idx = int(ident)
                if idx in classes:
                    raise ValueError(f"duplicate class id {idx}")
                if not name:
                    raise ValueError("empty class name")
                classes[idx] = name
            elif key == "pair":
                together, alone = value.split(":", 1)
                pairs.append((together, alone))
            else:
                raise ValueError(f"unknown config key {key!r}")
        except ValueError as exc:
            raise ConfigError(f"labels line {lineno}: {exc}") from exc
    if not classes:
        raise ConfigError("label-set config defines no classes")
    if sorted(classes) != list(range(len(classes))):
        raise ConfigError(f"class ids must cover 0..{len(classes) - 1} exactly")
    try:
        return ActionLabelSet(
            classes=tuple(classes[i] for i in range(len(classes))),
            pairs=tuple(pairs),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def read_labels(path: str | os.PathLike) -> ActionLabelSet:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_labels(fh.read())


# ---------------------------------------------------------------------------
# P5 label masks + sidecar id table


def parse_label_table(text: str) -> dict[int, str]:
    """Parse sidecar lines of `id=<int> name=<string>`."""
    names: dict[int, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            ident_part, name_part = line.split(None, 1)
            if not ident_part.startswith("id=") or not name_part.startswith("name="):
                raise ValueError("expected `id=<int> name=<string>`")
            ident = int(ident_part[3:])
            name = name_part[5:]
            if not name:
                raise ValueError("empty scene name")
            if ident in names:
                raise ValueError(f"duplicate id {ident}")
            if name in names.values():
                raise ValueError(f"duplicate name {name!r}")
            names[ident] = name
        except ValueError as exc:
            raise ConfigError(f"label table line {lineno}: {exc}") from exc
    return names


def read_label_table(path: str | os.PathLike) -> dict[int, str]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_label_table(fh.read())


def _pgm_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    # whitespace-separated header tokens; '#' starts a comment to end of line
    tokens: list[bytes] = []
    i = 0
    while len(tokens) < count:
        if i >= len(data):
            raise ValueError("truncated header")
        ch = data[i : i + 1]
        if ch == b"#":
            while i < len(data) and data[i : i + 1] != b"\n":
                i += 1
        elif ch.isspace():
            i += 1
        else:
            j = i
            while j < len(data) and not data[j : j + 1].isspace() and data[j : j + 1] != b"#":
                j += 1
            tokens.append(data[i:j])
            i = j
    # exactly one whitespace byte separates the header from the raster
    return tokens, i + 1


def read_mask(path: str | os.PathLike, names: Mapping[int, str]) -> LabelMask:
    """Read a binary 8-bit P5 raster whose pixel values are scene-class ids."""
    with open(path, "rb") as fh:
        data = fh.read()
    try:
        tokens, offset = _pgm_tokens(data, 4)
        if tokens[0] != b"P5":
            raise ValueError(f"not a P5 file (magic {tokens[0]!r})")
        width, height, maxval = (int(t) for t in tokens[1:])
        if maxval <= 0 or maxval > 255:
            raise ValueError(f"maxval {maxval} outside 8-bit range")
        raster = data[offset : offset + width * height]
        if len(raster) != width * height:
            raise ValueError("truncated raster data")
        grid = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
        return LabelMask(width=width, height=height, data=grid, names=dict(names))
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc


def write_mask(path: str | os.PathLike, mask: LabelMask) -> None:
    with open(path, "wb") as fh:
        fh.write(f"P5\n{mask.width} {mask.height}\n255\n".encode("ascii"))
        fh.write(mask.data.astype(np.uint8).tobytes())


def find_mask_path(mask_dir: str | os.PathLike, video: str, frame: int) -> str | None:
    """Locate the mask for a frame: `<video>__<frame>.pgm` beats `<video>.pgm`."""
    per_frame = os.path.join(mask_dir, f"{video}__{frame}.pgm")
    if os.path.exists(per_frame):
        return per_frame
    per_video = os.path.join(mask_dir, f"{video}.pgm")
    if os.path.exists(per_video):
        return per_video
    return None
