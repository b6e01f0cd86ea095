"""COCO-style detection metrics: greedy matching, interpolated AP, AR@K.

Detections are matched per class: ranked by score (ties by source_index),
each detection claims the unmatched same-image ground truth with the highest
IoU when that IoU reaches the evaluation threshold. AP interpolates precision
over a fixed recall grid; the headline mean AP averages over classes with at
least one ground truth and over the overlap-threshold grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import BBox, area, boxes_to_array, iou_one_vs_many
from .suppression import Detection, SuppressionConfig, rule_from_name, suppress_all

__all__ = [
    "GroundTruth",
    "EvalConfig",
    "EvalSummary",
    "SweepRow",
    "match_detections",
    "average_precision",
    "evaluate",
    "sweep",
    "COCO_AREA_RANGES",
]

COCO_AREA_RANGES: dict[str, tuple[float, float]] = {
    "small": (0.0, 32.0**2),
    "medium": (32.0**2, 96.0**2),
    "large": (96.0**2, float("inf")),
}


@dataclass(frozen=True)
class GroundTruth:
    box: BBox
    class_id: int
    image_id: int

    def __post_init__(self) -> None:
        if self.class_id < 0 or self.image_id < 0:
            raise ValueError("class_id and image_id must be >= 0")


def _default_thresholds() -> tuple[float, ...]:
    return tuple(round(0.50 + 0.05 * i, 2) for i in range(10))


def _default_recall_grid() -> tuple[float, ...]:
    return tuple(round(0.01 * i, 2) for i in range(101))


@dataclass(frozen=True)
class EvalConfig:
    overlap_thresholds: tuple[float, ...] = field(default_factory=_default_thresholds)
    recall_grid: tuple[float, ...] = field(default_factory=_default_recall_grid)
    area_ranges: dict[str, tuple[float, float]] = field(
        default_factory=lambda: dict(COCO_AREA_RANGES)
    )
    max_det_caps: tuple[int, ...] = (10, 100)

    def __post_init__(self) -> None:
        ots = self.overlap_thresholds
        if not ots or any(not 0.0 < t <= 1.0 for t in ots):
            raise ValueError("overlap_thresholds must be non-empty reals in (0, 1]")
        if any(b <= a for a, b in zip(ots, ots[1:])):
            raise ValueError("overlap_thresholds must be strictly increasing")
        grid = self.recall_grid
        if len(grid) < 2 or grid[0] != 0.0 or grid[-1] != 1.0:
            raise ValueError("recall_grid must span [0, 1]")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("recall_grid must be strictly increasing")
        if any(k <= 0 for k in self.max_det_caps):
            raise ValueError("max_det_caps must be positive")


@dataclass(frozen=True)
class EvalSummary:
    """Aggregated metrics; all values lie in [0, 1].

    ap_by_area omits ranges with no ground truth anywhere; classes with zero
    ground truths are excluded from every average.
    """

    ap_per_class_per_threshold: dict[tuple[int, float], float]
    mean_ap: float
    ap_at_05: float
    ap_by_area: dict[str, float]
    ar_at_k: dict[int, float]
    pr_curves: dict[tuple[int, float], np.ndarray] | None = None


@dataclass
class _MatchResult:
    order: list[int]          # detection indices, ranked by (-score, source_index)
    flags: np.ndarray         # TP flag per ranked detection
    matched_gt: np.ndarray    # matched gt index per ranked detection, -1 if FP
    best_gt: np.ndarray       # highest-IoU gt in the detection's image, -1 if none


def _ranked_order(dets: list[Detection]) -> list[int]:
    return sorted(range(len(dets)), key=lambda i: (-dets[i].score, dets[i].source_index))


def _match_class(dets: list[Detection], gts: list[GroundTruth], ot: float) -> _MatchResult:
    order = _ranked_order(dets)
    n = len(dets)
    flags = np.zeros(n, dtype=bool)
    matched_gt = np.full(n, -1, dtype=np.int64)
    best_gt = np.full(n, -1, dtype=np.int64)
    gts_by_image: dict[int, list[int]] = {}
    for gi, g in enumerate(gts):
        gts_by_image.setdefault(g.image_id, []).append(gi)
    gt_arr = boxes_to_array([g.box for g in gts]) if gts else None
    taken = np.zeros(len(gts), dtype=bool)
    for pos, di in enumerate(order):
        det = dets[di]
        cand = gts_by_image.get(det.image_id)
        if not cand:
            continue
        idx = np.asarray(cand, dtype=np.int64)
        ious = iou_one_vs_many(det.box, gt_arr[idx])
        best_gt[pos] = idx[int(np.argmax(ious))]
        free = ~taken[idx]
        if not free.any():
            continue
        masked = np.where(free, ious, -1.0)
        j = int(np.argmax(masked))
        if masked[j] >= ot:
            flags[pos] = True
            gi = int(idx[j])
            matched_gt[pos] = gi
            taken[gi] = True
    return _MatchResult(order, flags, matched_gt, best_gt)


def match_detections(
    dets: list[Detection], gts: list[GroundTruth], ot: float
) -> tuple[np.ndarray, int]:
    """Greedy TP/FP assignment for one class at one overlap threshold.

    Returns (flags, gt_count) where flags are in ranked detection order
    (score descending, ties by source_index).
    """
    if not 0.0 < ot <= 1.0:
        raise ValueError(f"overlap threshold must be in (0, 1], got {ot}")
    classes = {d.class_id for d in dets} | {g.class_id for g in gts}
    if len(classes) > 1:
        raise ValueError(f"match_detections requires a single class, got {sorted(classes)}")
    result = _match_class(dets, gts, ot)
    return result.flags, len(gts)


def average_precision(flags, gt_count: int, recall_grid=None) -> float:
    """Interpolated AP over a recall grid for one ranked TP/FP sequence.

    The interpolated precision at recall r is the maximum precision attained
    at any recall >= r; the AP is the mean of that envelope over the grid.
    Returns 0.0 when gt_count is 0 (such classes are excluded upstream).
    """
    if gt_count < 0:
        raise ValueError("gt_count must be >= 0")
    if gt_count == 0:
        return 0.0
    flags = np.asarray(flags, dtype=bool)
    grid = np.asarray(
        _default_recall_grid() if recall_grid is None else recall_grid, dtype=np.float64
    )
    if flags.size == 0:
        return 0.0
    return float(_interp_precision(flags, gt_count, grid).mean())


def _interp_precision(flags: np.ndarray, gt_count: int, grid: np.ndarray) -> np.ndarray:
    tp = np.cumsum(flags)
    precision = tp / np.arange(1, flags.size + 1)
    recall = tp / gt_count
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    idx = np.searchsorted(recall, grid, side="left")
    out = np.zeros(grid.size, dtype=np.float64)
    inside = idx < flags.size
    out[inside] = envelope[idx[inside]]
    return out


def _in_range(value: float, rng: tuple[float, float]) -> bool:
    return rng[0] <= value < rng[1]


def _area_flags(
    match: _MatchResult,
    dets: list[Detection],
    gt_areas: np.ndarray,
    rng: tuple[float, float],
) -> np.ndarray:
    """TP/FP flags restricted to one area range, with out-of-range entries dropped.

    A detection is ignored (neither TP nor FP) when it matched an out-of-range
    ground truth, when unmatched but its best-IoU ground truth is out of range,
    or when its own area is out of range and it matched no in-range ground truth.
    """
    kept: list[bool] = []
    for pos, di in enumerate(match.order):
        if match.flags[pos]:
            if _in_range(float(gt_areas[match.matched_gt[pos]]), rng):
                kept.append(True)
            continue
        bg = int(match.best_gt[pos])
        if bg >= 0 and not _in_range(float(gt_areas[bg]), rng):
            continue
        if not _in_range(area(dets[di].box), rng):
            continue
        kept.append(False)
    return np.asarray(kept, dtype=bool)


def _capped_positions(dets: list[Detection], cap: int) -> set[int]:
    by_image: dict[int, list[int]] = {}
    for i, d in enumerate(dets):
        by_image.setdefault(d.image_id, []).append(i)
    keep: set[int] = set()
    for positions in by_image.values():
        ranked = sorted(
            positions,
            key=lambda i: (-dets[i].score, dets[i].source_index, dets[i].class_id),
        )
        keep.update(ranked[:cap])
    return keep


def evaluate(
    dets: list[Detection],
    gts: list[GroundTruth],
    cfg: EvalConfig | None = None,
    include_pr_curves: bool = False,
) -> EvalSummary:
    """Full metric suite over all classes and overlap thresholds."""
    if cfg is None:
        cfg = EvalConfig()
    if not gts:
        raise ValueError("nothing to evaluate: ground-truth set is empty")
    grid = np.asarray(cfg.recall_grid, dtype=np.float64)
    classes = sorted({g.class_id for g in gts})
    gts_by_class: dict[int, list[GroundTruth]] = {c: [] for c in classes}
    for g in gts:
        gts_by_class[g.class_id].append(g)
    dets_by_class: dict[int, list[Detection]] = {c: [] for c in classes}
    for d in dets:
        if d.class_id in dets_by_class:
            dets_by_class[d.class_id].append(d)

    thresholds = cfg.overlap_thresholds
    match_thresholds = sorted(set(thresholds) | {0.5})
    ap: dict[tuple[int, float], float] = {}
    curves: dict[tuple[int, float], np.ndarray] = {}
    ap05_per_class: list[float] = []
    area_values: dict[str, list[float]] = {name: [] for name in cfg.area_ranges}

    for c in classes:
        cdets = dets_by_class[c]
        cgts = gts_by_class[c]
        gt_areas = np.array([area(g.box) for g in cgts], dtype=np.float64)
        matches = {ot: _match_class(cdets, cgts, ot) for ot in match_thresholds}
        for ot in thresholds:
            m = matches[ot]
            ap[(c, ot)] = average_precision(m.flags, len(cgts), grid)
            if include_pr_curves:
                curves[(c, ot)] = (
                    _interp_precision(m.flags, len(cgts), grid)
                    if m.flags.size
                    else np.zeros(grid.size)
                )
            for name, rng in cfg.area_ranges.items():
                gt_count_r = int(sum(_in_range(float(a), rng) for a in gt_areas))
                if gt_count_r == 0:
                    continue
                flags_r = _area_flags(m, cdets, gt_areas, rng)
                area_values[name].append(average_precision(flags_r, gt_count_r, grid))
        ap05_per_class.append(average_precision(matches[0.5].flags, len(cgts), grid))

    mean_ap = float(np.mean([ap[(c, ot)] for c in classes for ot in thresholds]))
    ap_at_05 = float(np.mean(ap05_per_class))
    ap_by_area = {
        name: float(np.mean(vals)) for name, vals in area_values.items() if vals
    }

    ar_at_k: dict[int, float] = {}
    for cap in cfg.max_det_caps:
        keep = _capped_positions(dets, cap)
        recalls: list[float] = []
        for c in classes:
            capped = [d for i, d in enumerate(dets) if i in keep and d.class_id == c]
            cgts = gts_by_class[c]
            for ot in thresholds:
                m = _match_class(capped, cgts, ot)
                recalls.append(float(m.flags.sum()) / len(cgts))
        ar_at_k[cap] = float(np.mean(recalls))

    return EvalSummary(
        ap_per_class_per_threshold=ap,
        mean_ap=mean_ap,
        ap_at_05=ap_at_05,
        ap_by_area=ap_by_area,
        ar_at_k=ar_at_k,
        pr_curves=curves if include_pr_curves else None,
    )


@dataclass(frozen=True)
class SweepRow:
    param_name: str
    param_value: float
    ap_by_threshold: dict[float, float]
    mean_ap: float


def sweep(
    dets_raw: list[Detection],
    gts: list[GroundTruth],
    method: str,
    params: list[float],
    cfg: EvalConfig | None = None,
    score_threshold: float = 1e-3,
    max_detections_per_image: int = 400,
    backend: str | None = None,
    threads: int = 1,
) -> list[SweepRow]:
    """Suppress with each parameter value and evaluate; one row per value.

    For hard/linear the swept parameter is the overlap threshold nt; for
    gaussian it is sigma. AP columns are per overlap threshold, averaged over
    classes with ground truth.
    """
    if not params:
        raise ValueError("sweep requires at least one parameter value")
    if cfg is None:
        cfg = EvalConfig()
    name = method.lower()
    param_name = "sigma" if name == "gaussian" else "nt"
    rows: list[SweepRow] = []
    classes = sorted({g.class_id for g in gts})
    for value in params:
        if param_name == "sigma":
            rule = rule_from_name(name, sigma=value)
        else:
            rule = rule_from_name(name, nt=value)
        scfg = SuppressionConfig(
            rule=rule,
            score_threshold=score_threshold,
            max_detections_per_image=max_detections_per_image,
        )
        kept = suppress_all(dets_raw, scfg, backend=backend, threads=threads)
        summary = evaluate(kept, gts, cfg)
        ap_by_ot = {
            ot: float(
                np.mean([summary.ap_per_class_per_threshold[(c, ot)] for c in classes])
            )
            for ot in cfg.overlap_thresholds
        }
        rows.append(SweepRow(param_name, float(value), ap_by_ot, summary.mean_ap))
    return rows
