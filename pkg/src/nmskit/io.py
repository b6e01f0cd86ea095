"""JSON ingest/emit in the COCO-results shape, plus CSV metric reports.

Detection and annotation files are JSON arrays of records with
[x, y, width, height] boxes; ingest converts to corner coordinates and
assigns source_index by file order. Floats are serialized at 6 decimal
places, which is the round-trip precision contract. Ingest never repairs
invalid records; errors name the offending record index.
"""

from __future__ import annotations

import csv
import json
import math
import warnings

from .geometry import BBox
from .suppression import Detection
from .evaluation import EvalSummary, GroundTruth, SweepRow

__all__ = [
    "load_detections",
    "load_annotations",
    "save_detections",
    "save_annotations",
    "save_report",
    "REPORT_HEADER",
    "ROUND_DECIMALS",
]

ROUND_DECIMALS = 6
REPORT_HEADER = ("class_id", "overlap_threshold", "ap")


def _load_array(path) -> list:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: malformed JSON: {exc}") from exc
    if not isinstance(data, list):
        raise ValueError(f"{path}: expected a JSON array of records")
    return data


def _record_int(rec: dict, key: str, idx: int) -> int:
    value = rec.get(key)
    if not isinstance(value, int) or isinstance(value, bool):
        raise ValueError(f"record {idx}: {key} must be an integer, got {value!r}")
    return value


def _record_box(rec: dict, idx: int) -> BBox:
    bbox = rec.get("bbox")
    if (
        not isinstance(bbox, list)
        or len(bbox) != 4
        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in bbox)
    ):
        raise ValueError(f"record {idx}: bbox must be [x, y, width, height] numbers")
    x, y, w, h = (float(v) for v in bbox)
    if not all(math.isfinite(v) for v in (x, y, w, h)):
        raise ValueError(f"record {idx}: bbox values must be finite")
    if w < 0 or h < 0:
        raise ValueError(f"record {idx}: bbox width/height must be >= 0, got {w}, {h}")
    return BBox(x, y, x + w, y + h)


def load_detections(path) -> list[Detection]:
    """Read a JSON array of detection records; source_index follows file order."""
    out: list[Detection] = []
    for idx, rec in enumerate(_load_array(path)):
        if not isinstance(rec, dict):
            raise ValueError(f"record {idx}: expected an object, got {type(rec).__name__}")
        box = _record_box(rec, idx)
        score = rec.get("score")
        if not isinstance(score, (int, float)) or isinstance(score, bool):
            raise ValueError(f"record {idx}: score must be a number, got {score!r}")
        try:
            det = Detection(
                box=box,
                score=float(score),
                class_id=_record_int(rec, "category_id", idx),
                image_id=_record_int(rec, "image_id", idx),
                source_index=idx,
            )
        except ValueError as exc:
            raise ValueError(f"record {idx}: {exc}") from None
        out.append(det)
    return out


def load_annotations(path) -> list[GroundTruth]:
    """Read a JSON array of annotation records; crowd records are dropped with a warning."""
    out: list[GroundTruth] = []
    dropped = 0
    for idx, rec in enumerate(_load_array(path)):
        if not isinstance(rec, dict):
            raise ValueError(f"record {idx}: expected an object, got {type(rec).__name__}")
        iscrowd = rec.get("iscrowd", 0)
        if iscrowd not in (0, 1):
            raise ValueError(f"record {idx}: iscrowd must be 0 or 1, got {iscrowd!r}")
        box = _record_box(rec, idx)
        class_id = _record_int(rec, "category_id", idx)
        image_id = _record_int(rec, "image_id", idx)
        if iscrowd == 1:
            dropped += 1
            continue
        try:
            out.append(GroundTruth(box=box, class_id=class_id, image_id=image_id))
        except ValueError as exc:
            raise ValueError(f"record {idx}: {exc}") from None
    if dropped:
        warnings.warn(f"{path}: dropped {dropped} crowd annotation(s)", stacklevel=2)
    return out


def _round(v: float) -> float:
    return round(float(v), ROUND_DECIMALS)


def save_detections(dets: list[Detection], path) -> None:
    records = [
        {
            "image_id": d.image_id,
            "category_id": d.class_id,
            "bbox": [_round(d.box.x1), _round(d.box.y1), _round(d.box.width), _round(d.box.height)],
            "score": _round(d.score),
        }
        for d in dets
    ]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(records, fh)
        fh.write("\n")


def save_annotations(gts: list[GroundTruth], path) -> None:
    records = [
        {
            "image_id": g.image_id,
            "category_id": g.class_id,
            "bbox": [_round(g.box.x1), _round(g.box.y1), _round(g.box.width), _round(g.box.height)],
            "iscrowd": 0,
        }
        for g in gts
    ]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(records, fh)
        fh.write("\n")


def _write_summary(summary: EvalSummary, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(REPORT_HEADER)
    for (class_id, ot) in sorted(summary.ap_per_class_per_threshold):
        ap = summary.ap_per_class_per_threshold[(class_id, ot)]
        writer.writerow([class_id, f"{ot:.2f}", f"{ap:.6f}"])
    writer.writerow(["mean_ap", "", f"{summary.mean_ap:.6f}"])
    writer.writerow(["ap_at_05", "", f"{summary.ap_at_05:.6f}"])
    for name in sorted(summary.ap_by_area):
        writer.writerow([f"ap_{name}", "", f"{summary.ap_by_area[name]:.6f}"])
    for cap in sorted(summary.ar_at_k):
        writer.writerow([f"ar_at_{cap}", "", f"{summary.ar_at_k[cap]:.6f}"])


def _write_sweep(rows: list[SweepRow], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    thresholds = sorted(rows[0].ap_by_threshold)
    writer.writerow(
        ["param_name", "param_value"] + [f"ap@{ot:.2f}" for ot in thresholds] + ["mean_ap"]
    )
    for row in rows:
        writer.writerow(
            [row.param_name, f"{row.param_value:.6f}"]
            + [f"{row.ap_by_threshold[ot]:.6f}" for ot in thresholds]
            + [f"{row.mean_ap:.6f}"]
        )


def save_report(report, path) -> None:
    """Write an EvalSummary or a list of sweep rows as CSV."""
    if isinstance(report, EvalSummary):
        writer = _write_summary
    elif isinstance(report, list) and report and all(isinstance(r, SweepRow) for r in report):
        writer = _write_sweep
    else:
        raise TypeError("save_report expects an EvalSummary or a non-empty list of SweepRow")
    with open(path, "w", encoding="utf-8") as fh:
        writer(report, fh)
