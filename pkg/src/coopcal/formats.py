"""Frame files (versioned JSON lines) and the results CSV.

See FORMAT.md at the repository root for the field-by-field layout.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, fields
from typing import Any, Iterable, Mapping, Sequence

from .context import DetectionSet
from .geometry import ObjectBox, Pose2, RigidTransform2
from .sim import NoiseConfig, ScenarioFrame

FORMAT_NAME = "coopcal-frames"
FORMAT_VERSION = 1

RESULT_COLUMNS = (
    "method",
    "seed",
    "eta",
    "sigma_p",
    "sigma_theta",
    "sigma_p_L",
    "sigma_theta_L",
    "precision",
    "recall",
    "ad_m",
    "rre_deg",
    "rte_m",
    "map_07",
    "runtime_ms",
)


class FrameFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.line = line
        self.field = field


def _dumps(obj) -> str:
    # repr-based float output is the shortest round-trip decimal on every platform
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def _box(b: ObjectBox) -> dict:
    return {
        "id": b.id,
        "x": b.x,
        "y": b.y,
        "heading": b.heading,
        "height": b.height,
        "width": b.width,
        "length": b.length,
        "score": b.score,
    }


def _pose(p: Pose2) -> dict:
    return {"x": p.x, "y": p.y, "heading": p.heading}


def _view(d: DetectionSet) -> dict:
    return {
        "agent_id": d.agent_id,
        "pose_measurement": _pose(d.pose_measurement),
        "objects": [_box(b) for b in d.objects],
    }


def frame_to_record(f: ScenarioFrame) -> dict:
    return {
        "frame_index": f.frame_index,
        "seed": f.seed,
        "eta": f.eta,
        "noise": asdict(f.noise),
        "ground_truth": [_box(b) for b in f.ground_truth],
        "ego_truth_pose": _pose(f.ego_truth_pose),
        "coop_truth_pose": _pose(f.coop_truth_pose),
        "ego_view": _view(f.ego_view),
        "coop_view": _view(f.coop_view),
        "ego_gt_index": list(f.ego_gt_index),
        "coop_gt_index": list(f.coop_gt_index),
        "covisible_truth": [list(p) for p in f.covisible_truth],
        "T_true": {"angle": f.T_true.angle, "tx": f.T_true.tx, "ty": f.T_true.ty},
    }


class _Reader:
    """Field access that reports the dotted path of whatever is missing or bad."""

    def __init__(self, line: int):
        self.line = line

    def get(self, rec: Mapping, key: str, path: str, kind=None):
        full = f"{path}.{key}" if path else key
        if not isinstance(rec, Mapping) or key not in rec:
            raise FrameFormatError("missing", self.line, full)
        v = rec[key]
        if kind is float:
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise FrameFormatError(f"expected a finite number, got {v!r}", self.line, full)
            return float(v)
        if kind is int:
            if isinstance(v, bool) or not isinstance(v, int):
                raise FrameFormatError(f"expected an integer, got {v!r}", self.line, full)
            return v
        if kind is list and not isinstance(v, list):
            raise FrameFormatError(f"expected a list, got {type(v).__name__}", self.line, full)
        return v

    def box(self, rec, path) -> ObjectBox:
        try:
            return ObjectBox(
                id=self.get(rec, "id", path),
                x=self.get(rec, "x", path, float),
                y=self.get(rec, "y", path, float),
                heading=self.get(rec, "heading", path, float),
                height=self.get(rec, "height", path, float),
                width=self.get(rec, "width", path, float),
                length=self.get(rec, "length", path, float),
                score=self.get(rec, "score", path, float),
            )
        except ValueError as exc:
            if isinstance(exc, FrameFormatError):
                raise
            raise FrameFormatError(str(exc), self.line, path) from None

    def pose(self, rec, path) -> Pose2:
        return Pose2(
            self.get(rec, "x", path, float),
            self.get(rec, "y", path, float),
            self.get(rec, "heading", path, float),
        )

    def view(self, rec, path) -> DetectionSet:
        objs = self.get(rec, "objects", path, list)
        try:
            return DetectionSet(
                self.get(rec, "agent_id", path),
                self.pose(self.get(rec, "pose_measurement", path), f"{path}.pose_measurement"),
                tuple(self.box(o, f"{path}.objects[{k}]") for k, o in enumerate(objs)),
            )
        except FrameFormatError:
            raise
        except ValueError as exc:
            raise FrameFormatError(str(exc), self.line, path) from None

    def noise(self, rec, path) -> NoiseConfig:
        kw: dict[str, Any] = {}
        for f in fields(NoiseConfig):
            if f.name == "loc_mode":
                kw[f.name] = self.get(rec, f.name, path)
            elif f.name == "seed":
                kw[f.name] = self.get(rec, f.name, path, int)
            else:
                kw[f.name] = self.get(rec, f.name, path, float)
        try:
            return NoiseConfig(**kw)
        except ValueError as exc:
            raise FrameFormatError(str(exc), self.line, path) from None

    def index_list(self, rec, key) -> tuple[int, ...]:
        vals = self.get(rec, key, "", list)
        for k, v in enumerate(vals):
            if isinstance(v, bool) or not isinstance(v, int):
                raise FrameFormatError(f"expected an integer, got {v!r}", self.line, f"{key}[{k}]")
        return tuple(vals)


def record_to_frame(rec: Mapping, line: int | None = None) -> ScenarioFrame:
    r = _Reader(line)
    gt = r.get(rec, "ground_truth", "", list)
    cov = r.get(rec, "covisible_truth", "", list)
    pairs = []
    for k, p in enumerate(cov):
        if not (isinstance(p, list) and len(p) == 2 and all(isinstance(x, int) for x in p)):
            raise FrameFormatError("expected an [ego, coop] index pair", line, f"covisible_truth[{k}]")
        pairs.append((p[0], p[1]))
    t = r.get(rec, "T_true", "")
    frame = ScenarioFrame(
        frame_index=r.get(rec, "frame_index", "", int),
        seed=r.get(rec, "seed", "", int),
        eta=r.get(rec, "eta", "", float),
        noise=r.noise(r.get(rec, "noise", ""), "noise"),
        ground_truth=tuple(r.box(b, f"ground_truth[{k}]") for k, b in enumerate(gt)),
        ego_truth_pose=r.pose(r.get(rec, "ego_truth_pose", ""), "ego_truth_pose"),
        coop_truth_pose=r.pose(r.get(rec, "coop_truth_pose", ""), "coop_truth_pose"),
        ego_view=r.view(r.get(rec, "ego_view", ""), "ego_view"),
        coop_view=r.view(r.get(rec, "coop_view", ""), "coop_view"),
        ego_gt_index=r.index_list(rec, "ego_gt_index"),
        coop_gt_index=r.index_list(rec, "coop_gt_index"),
        covisible_truth=tuple(pairs),
        T_true=RigidTransform2(
            r.get(t, "angle", "T_true", float), r.get(t, "tx", "T_true", float), r.get(t, "ty", "T_true", float)
        ),
    )
    n_gt = len(frame.ground_truth)
    for name, idx, view in (
        ("ego_gt_index", frame.ego_gt_index, frame.ego_view),
        ("coop_gt_index", frame.coop_gt_index, frame.coop_view),
    ):
        if len(idx) != len(view) or any(not 0 <= g < n_gt for g in idx):
            raise FrameFormatError("inconsistent with the view or ground truth", line, name)
    for k, (a, b) in enumerate(frame.covisible_truth):
        if not (0 <= a < len(frame.ego_view) and 0 <= b < len(frame.coop_view)):
            raise FrameFormatError("index out of range", line, f"covisible_truth[{k}]")
    return frame


def write_frames(frames: Iterable[ScenarioFrame], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_dumps({"format": FORMAT_NAME, "version": FORMAT_VERSION}) + "\n")
        for f in frames:
            fh.write(_dumps(frame_to_record(f)) + "\n")


def read_frames(path: str | os.PathLike) -> list[ScenarioFrame]:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise FrameFormatError("empty file (missing header)", 1, "format")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise FrameFormatError(f"header is not JSON: {exc.msg}", 1) from None
    if not isinstance(header, dict) or header.get("format") != FORMAT_NAME:
        raise FrameFormatError(f"not a {FORMAT_NAME} file", 1, "format")
    if header.get("version") != FORMAT_VERSION:
        raise FrameFormatError(
            f"unsupported version {header.get('version')!r} (expected {FORMAT_VERSION})", 1, "version"
        )
    frames = []
    for n, text in enumerate(lines[1:], start=2):
        if not text.strip():
            continue
        try:
            rec = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FrameFormatError(f"invalid JSON: {exc.msg}", n) from None
        if not isinstance(rec, dict):
            raise FrameFormatError("record is not an object", n)
        frames.append(record_to_frame(rec, n))
    return frames


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def export_results(rows: Sequence[Mapping], path: str | os.PathLike) -> None:
    """Write metric rows under the fixed :data:`RESULT_COLUMNS` header."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for row in rows:
            w.writerow([_fmt(row.get(c)) for c in RESULT_COLUMNS])


def read_results(path: str | os.PathLike) -> list[dict]:
    """Parse a results CSV back into dicts with numeric fields as floats."""
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            rec: dict[str, Any] = {}
            for k, v in row.items():
                if k == "method":
                    rec[k] = v
                elif k == "seed":
                    rec[k] = int(v)
                else:
                    rec[k] = float(v) if v != "" else None
            out.append(rec)
    return out
