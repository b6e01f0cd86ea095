"""Seeded generator of crowded scenes with detector-like noisy detections.

Each ground-truth object gets one or more jittered detections whose score
correlates with localization quality, plus low-score background false
positives. All randomness comes from numpy's PCG64 generator, seeded per
image from SeedSequence([seed, image_index]); that generator identity is part
of the reproducibility contract, so identical configs produce byte-identical
datasets on any platform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import BBox, iou
from .suppression import Detection
from .evaluation import GroundTruth

__all__ = ["SynthConfig", "generate", "closeness_bound", "crowded_scene_config"]

_PLACE_TRIES = 100
_CLOSE_TRIES = 50


@dataclass(frozen=True)
class SynthConfig:
    """Generative model for crowded synthetic scenes.

    Integer ranges are inclusive on both ends. crowding is the probability of
    placing a new object overlapping an existing same-class object; jitter_scale perturbs each detection edge by a Gaussian with
    standard deviation jitter_scale times the box dimension. The score model
    is score = clamp(score_base - score_decay * (1 - iou_with_gt) + noise);
    false positives draw uniform scores from fp_score_range.
    """

    num_images: int
    canvas: tuple[float, float] = (640.0, 480.0)
    objects_per_image: tuple[int, int] = (3, 8)
    crowding: float = 0.5
    duplicates_per_object: tuple[int, int] = (1, 3)
    jitter_scale: float = 0.05
    score_noise: float = 0.02
    fp_per_image: tuple[int, int] = (1, 4)
    num_classes: int = 3
    seed: int = 0
    object_size_range: tuple[float, float] = (0.06, 0.25)
    score_base: float = 0.95
    score_decay: float = 0.8
    fp_score_range: tuple[float, float] = (0.01, 0.4)

    def __post_init__(self) -> None:
        if self.num_images <= 0:
            raise ValueError("num_images must be > 0")
        if self.canvas[0] <= 0 or self.canvas[1] <= 0:
            raise ValueError(f"canvas must be positive, got {self.canvas}")
        for name in ("objects_per_image", "duplicates_per_object", "fp_per_image"):
            lo, hi = getattr(self, name)
            if lo < 0 or hi < lo:
                raise ValueError(f"{name} range must satisfy 0 <= lo <= hi, got ({lo}, {hi})")
        if self.objects_per_image[0] < 1:
            raise ValueError("objects_per_image must be at least 1")
        if self.crowding < 0:
            raise ValueError("crowding must be >= 0")
        if self.jitter_scale < 0 or self.score_noise < 0:
            raise ValueError("jitter_scale and score_noise must be >= 0")
        if self.num_classes <= 0:
            raise ValueError("num_classes must be > 0")
        lo, hi = self.object_size_range
        if not 0 < lo <= hi:
            raise ValueError(f"object_size_range must satisfy 0 < lo <= hi, got ({lo}, {hi})")
        lo, hi = self.fp_score_range
        if not 0 <= lo <= hi <= 1:
            raise ValueError(f"fp_score_range must lie in [0, 1], got ({lo}, {hi})")


def closeness_bound(jitter_scale: float) -> float:
    """Guaranteed minimum IoU between each ground truth and its closest detection."""
    return max(0.0, 1.0 - 4.0 * jitter_scale)


def crowded_scene_config(num_images: int = 60, seed: int = 20260808) -> SynthConfig:
    """Preset used by the acceptance checks: crowded same-class neighbors.

    Heavy crowding with moderate jitter creates the regime where hard
    suppression at a low threshold removes whole objects while soft decay
    keeps them ranked.
    """
    return SynthConfig(
        num_images=num_images,
        canvas=(640.0, 480.0),
        objects_per_image=(4, 8),
        crowding=0.5,
        duplicates_per_object=(3, 5),
        jitter_scale=0.08,
        score_noise=0.10,
        fp_per_image=(2, 6),
        num_classes=3,
        seed=seed,
        score_decay=0.6,
        fp_score_range=(0.01, 0.3),
    )


def _image_rng(seed: int, image_index: int) -> np.random.Generator:
    entropy = seed & 0xFFFFFFFFFFFFFFFF
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([entropy, image_index])))


def _rand_int(rng: np.random.Generator, lohi: tuple[int, int]) -> int:
    return int(rng.integers(lohi[0], lohi[1] + 1))


def _uniform_box(rng: np.random.Generator, cfg: SynthConfig, image_index: int) -> BBox:
    width, height = cfg.canvas
    lo, hi = cfg.object_size_range
    min_side = min(width, height)
    for _ in range(_PLACE_TRIES):
        w = rng.uniform(lo, hi) * min_side
        h = rng.uniform(lo, hi) * min_side
        if w > width or h > height:
            continue
        x1 = rng.uniform(0.0, width - w)
        y1 = rng.uniform(0.0, height - h)
        return BBox(x1, y1, x1 + w, y1 + h)
    raise ValueError(
        f"image {image_index}: could not place object after {_PLACE_TRIES} attempts"
    )


def _place_object(
    rng: np.random.Generator,
    cfg: SynthConfig,
    class_id: int,
    existing: list[tuple[int, BBox]],
    image_index: int,
) -> BBox:
    width, height = cfg.canvas
    anchors = [b for c, b in existing if c == class_id]
    crowd = bool(anchors) and rng.random() < min(cfg.crowding, 1.0)
    if crowd:
        for _ in range(_PLACE_TRIES):
            anchor = anchors[int(rng.integers(0, len(anchors)))]
            scale = rng.uniform(0.9, 1.1)
            w = anchor.width * scale
            h = anchor.height * scale
            if w > width or h > height:
                continue
            fx = rng.uniform(0.08, 0.45) * (1.0 if rng.random() < 0.5 else -1.0)
            fy = rng.uniform(0.0, 0.12) * (1.0 if rng.random() < 0.5 else -1.0)
            x1 = min(max(anchor.x1 + fx * anchor.width, 0.0), width - w)
            y1 = min(max(anchor.y1 + fy * anchor.height, 0.0), height - h)
            box = BBox(x1, y1, x1 + w, y1 + h)
            if iou(box, anchor) >= 0.2:
                return box
        raise ValueError(
            f"image {image_index}: could not place crowded object after {_PLACE_TRIES} attempts"
        )
    return _uniform_box(rng, cfg, image_index)


def _jittered(rng: np.random.Generator, cfg: SynthConfig, box: BBox) -> BBox:
    width, height = cfg.canvas
    offs = rng.normal(0.0, cfg.jitter_scale, 4)
    xa = box.x1 + offs[0] * box.width
    ya = box.y1 + offs[1] * box.height
    xb = box.x2 + offs[2] * box.width
    yb = box.y2 + offs[3] * box.height
    x1, x2 = sorted((xa, xb))
    y1, y2 = sorted((ya, yb))
    x1 = min(max(x1, 0.0), width)
    x2 = min(max(x2, 0.0), width)
    y1 = min(max(y1, 0.0), height)
    y2 = min(max(y2, 0.0), height)
    return BBox(x1, y1, x2, y2)


def _near_copy(rng: np.random.Generator, cfg: SynthConfig, box: BBox) -> BBox:
    # The first detection per object must stay within the closeness bound so
    # every object is recoverable; fall back to an exact copy if jitter keeps
    # missing it.
    bound = closeness_bound(cfg.jitter_scale)
    for _ in range(_CLOSE_TRIES):
        cand = _jittered(rng, cfg, box)
        if iou(cand, box) >= bound:
            return cand
    return BBox(box.x1, box.y1, box.x2, box.y2)


def generate(cfg: SynthConfig) -> tuple[list[GroundTruth], list[Detection]]:
    """Generate (ground truths, raw detections) for the configured scenes."""
    gts: list[GroundTruth] = []
    det_rows: list[tuple[int, int, BBox, float]] = []
    for i in range(cfg.num_images):
        rng = _image_rng(cfg.seed, i)
        image_gts: list[tuple[int, BBox]] = []
        n_obj = _rand_int(rng, cfg.objects_per_image)
        for _ in range(n_obj):
            class_id = int(rng.integers(0, cfg.num_classes))
            box = _place_object(rng, cfg, class_id, image_gts, i)
            image_gts.append((class_id, box))
        for class_id, box in image_gts:
            n_det = 1 + _rand_int(rng, cfg.duplicates_per_object)
            for j in range(n_det):
                det_box = _near_copy(rng, cfg, box) if j == 0 else _jittered(rng, cfg, box)
                quality = iou(det_box, box)
                noise = float(rng.normal(0.0, cfg.score_noise)) if cfg.score_noise > 0 else 0.0
                score = cfg.score_base - cfg.score_decay * (1.0 - quality) + noise
                score = min(1.0, max(0.0, score))
                det_rows.append((i, class_id, det_box, score))
        for _ in range(_rand_int(rng, cfg.fp_per_image)):
            class_id = int(rng.integers(0, cfg.num_classes))
            box = _uniform_box(rng, cfg, i)
            score = float(rng.uniform(cfg.fp_score_range[0], cfg.fp_score_range[1]))
            det_rows.append((i, class_id, box, score))
        gts.extend(GroundTruth(box=b, class_id=c, image_id=i) for c, b in image_gts)
    dets = [
        Detection(box=b, score=s, class_id=c, image_id=img, source_index=n)
        for n, (img, c, b, s) in enumerate(det_rows)
    ]
    return gts, dets
