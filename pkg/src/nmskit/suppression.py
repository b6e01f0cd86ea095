"""Greedy suppression with pluggable rescoring rules (hard, linear, Gaussian).

The loop repeatedly selects the highest-scoring remaining detection, freezes
its current score in the output, then multiplies every other remaining score
by a weight derived from its overlap with the selected box. The hard rule
reproduces classic greedy NMS; the linear and Gaussian rules decay scores
instead of zeroing them.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .geometry import BBox, iou

__all__ = [
    "Detection",
    "Hard",
    "Linear",
    "Gaussian",
    "RescoreRule",
    "SuppressionConfig",
    "rule_from_name",
    "rescore_weight",
    "suppress_group",
    "suppress_all",
    "reference_suppress",
    "DEFAULT_NT",
    "DEFAULT_SIGMA",
    "DEFAULT_SCORE_THRESHOLD",
    "DEFAULT_MAX_DETECTIONS",
]

DEFAULT_NT = 0.3
DEFAULT_SIGMA = 0.5
DEFAULT_SCORE_THRESHOLD = 1e-3
DEFAULT_MAX_DETECTIONS = 400


@dataclass(frozen=True)
class Detection:
    """One scored box for one class in one image.

    source_index is the detection's position in the original input (file
    order at ingest) and breaks score ties deterministically; it must be
    unique within an (image_id, class_id) group.
    """

    box: BBox
    score: float
    class_id: int
    image_id: int
    source_index: int

    def __post_init__(self) -> None:
        score = float(self.score)
        if not (math.isfinite(score) and 0.0 <= score <= 1.0):
            raise ValueError(f"score must be finite and in [0, 1], got {self.score!r}")
        object.__setattr__(self, "score", score)
        if self.class_id < 0:
            raise ValueError(f"class_id must be >= 0, got {self.class_id}")
        if self.image_id < 0:
            raise ValueError(f"image_id must be >= 0, got {self.image_id}")


@dataclass(frozen=True)
class Hard:
    """Classic NMS weighting: 1 below the overlap threshold, 0 at or above it."""

    nt: float = DEFAULT_NT

    def __post_init__(self) -> None:
        if not 0.0 < self.nt < 1.0:
            raise ValueError(f"nt must be in (0, 1), got {self.nt}")


@dataclass(frozen=True)
class Linear:
    """Linear decay: weight 1 below the threshold, (1 - overlap) at or above it."""

    nt: float = DEFAULT_NT

    def __post_init__(self) -> None:
        if not 0.0 < self.nt < 1.0:
            raise ValueError(f"nt must be in (0, 1), got {self.nt}")


@dataclass(frozen=True)
class Gaussian:
    """Continuous decay exp(-overlap^2 / sigma), applied at every overlap."""

    sigma: float = DEFAULT_SIGMA

    def __post_init__(self) -> None:
        if not self.sigma > 0.0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")


RescoreRule = Hard | Linear | Gaussian


@dataclass(frozen=True)
class SuppressionConfig:
    rule: RescoreRule
    score_threshold: float = DEFAULT_SCORE_THRESHOLD
    max_detections_per_image: int = DEFAULT_MAX_DETECTIONS

    def __post_init__(self) -> None:
        if not 0.0 <= self.score_threshold < 1.0:
            raise ValueError(
                f"score_threshold must be in [0, 1), got {self.score_threshold}"
            )
        if self.max_detections_per_image <= 0:
            raise ValueError(
                f"max_detections_per_image must be > 0, got {self.max_detections_per_image}"
            )


def rule_from_name(method: str, nt: float | None = None, sigma: float | None = None) -> RescoreRule:
    """Build a rescoring rule from a CLI-style method name.

    nt is accepted only by "hard" and "linear"; sigma only by "gaussian".
    Unspecified parameters fall back to the defaults (nt 0.3, sigma 0.5).
    """
    name = method.lower()
    if name in ("hard", "linear"):
        if sigma is not None:
            raise ValueError(f"sigma is only valid with the gaussian method, not {name!r}")
        cls = Hard if name == "hard" else Linear
        return cls(DEFAULT_NT if nt is None else nt)
    if name == "gaussian":
        if nt is not None:
            raise ValueError("nt is only valid with the hard and linear methods")
        return Gaussian(DEFAULT_SIGMA if sigma is None else sigma)
    raise ValueError(f"unknown method {method!r} (expected hard, linear or gaussian)")


def rescore_weight(rule: RescoreRule, overlap: float) -> float:
    """Score multiplier for a box with the given overlap against the selected box."""
    if not (0.0 <= overlap <= 1.0):
        raise ValueError(f"overlap must be in [0, 1], got {overlap!r}")
    if isinstance(rule, Hard):
        return 1.0 if overlap < rule.nt else 0.0
    if isinstance(rule, Linear):
        return 1.0 if overlap < rule.nt else 1.0 - overlap
    if isinstance(rule, Gaussian):
        return math.exp(-(overlap * overlap) / rule.sigma)
    raise TypeError(f"unknown rescore rule: {rule!r}")


def _rule_code(rule: RescoreRule) -> tuple[int, float, float]:
    if isinstance(rule, Hard):
        return _kernels.HARD, rule.nt, 1.0
    if isinstance(rule, Linear):
        return _kernels.LINEAR, rule.nt, 1.0
    if isinstance(rule, Gaussian):
        return _kernels.GAUSSIAN, 0.0, rule.sigma
    raise TypeError(f"unknown rescore rule: {rule!r}")


def _check_group(dets: list[Detection]) -> None:
    first = dets[0]
    seen: set[int] = set()
    for d in dets:
        if d.image_id != first.image_id or d.class_id != first.class_id:
            raise ValueError(
                "suppress_group requires a single (image_id, class_id) group; "
                f"got ({first.image_id}, {first.class_id}) and ({d.image_id}, {d.class_id})"
            )
        if d.source_index in seen:
            raise ValueError(
                f"duplicate source_index {d.source_index} within group "
                f"({d.image_id}, {d.class_id})"
            )
        seen.add(d.source_index)


def _group_arrays(dets: list[Detection]):
    n = len(dets)
    x1 = np.empty(n, dtype=np.float64)
    y1 = np.empty(n, dtype=np.float64)
    x2 = np.empty(n, dtype=np.float64)
    y2 = np.empty(n, dtype=np.float64)
    scores = np.empty(n, dtype=np.float64)
    src = np.empty(n, dtype=np.int64)
    for i, d in enumerate(dets):
        x1[i] = d.box.x1
        y1[i] = d.box.y1
        x2[i] = d.box.x2
        y2[i] = d.box.y2
        scores[i] = d.score
        src[i] = d.source_index
    return x1, y1, x2, y2, scores, src


def suppress_group(
    dets: list[Detection],
    cfg: SuppressionConfig,
    backend: str | None = None,
) -> list[Detection]:
    """Greedy rescoring of one (image_id, class_id) group.

    Returns the surviving detections with their rescored confidences, sorted
    by final score descending (ties by lowest source_index). Boxes are never
    moved or merged; only scores change.
    """
    if not dets:
        return []
    _check_group(dets)
    x1, y1, x2, y2, scores, src = _group_arrays(dets)
    code, nt, sigma = _rule_code(cfg.rule)
    rows, final = _kernels.suppress_arrays(
        x1, y1, x2, y2, scores, src, code, nt, sigma, cfg.score_threshold, backend=backend
    )
    return [
        replace(dets[int(r)], score=float(s)) for r, s in zip(rows, final)
    ]


def _cap_and_order(per_image: dict[int, list[Detection]], cap: int) -> list[Detection]:
    # Keep the top-cap detections per image across classes; ties broken by
    # lowest source_index, then class_id, for a total deterministic order.
    final: list[Detection] = []
    for image_id in sorted(per_image):
        ranked = sorted(
            per_image[image_id],
            key=lambda d: (-d.score, d.source_index, d.class_id),
        )
        final.extend(ranked[:cap])
    return final


def suppress_all(
    dets: list[Detection],
    cfg: SuppressionConfig,
    backend: str | None = None,
    threads: int = 1,
) -> list[Detection]:
    """Suppress every (image_id, class_id) group independently, then cap per image.

    The output is deterministic and independent of the input ordering and of
    the worker count: groups are processed separately, merged per image, and
    truncated to cfg.max_detections_per_image by final score.
    """
    groups: dict[tuple[int, int], list[Detection]] = {}
    for d in dets:
        groups.setdefault((d.image_id, d.class_id), []).append(d)
    keys = sorted(groups)
    if threads > 1 and len(keys) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(
                pool.map(lambda k: suppress_group(groups[k], cfg, backend=backend), keys)
            )
    else:
        results = [suppress_group(groups[k], cfg, backend=backend) for k in keys]
    per_image: dict[int, list[Detection]] = {}
    for group_out in results:
        for d in group_out:
            per_image.setdefault(d.image_id, []).append(d)
    return _cap_and_order(per_image, cfg.max_detections_per_image)


def reference_suppress(dets: list[Detection], cfg: SuppressionConfig) -> list[Detection]:
    """Deliberately naive transcription of the greedy rescoring loop.

    Scalar Python throughout, no array tricks; used as a differential oracle
    against suppress_all. Same contract, including the per-image cap.
    """
    groups: dict[tuple[int, int], list[Detection]] = {}
    for d in dets:
        groups.setdefault((d.image_id, d.class_id), []).append(d)
    per_image: dict[int, list[Detection]] = {}
    for key in sorted(groups):
        group = groups[key]
        _check_group(group)
        pool: list[list] = [[d.score, d] for d in group]
        while pool:
            best = 0
            for i in range(1, len(pool)):
                if pool[i][0] > pool[best][0] or (
                    pool[i][0] == pool[best][0]
                    and pool[i][1].source_index < pool[best][1].source_index
                ):
                    best = i
            best_score, best_det = pool.pop(best)
            per_image.setdefault(best_det.image_id, []).append(
                replace(best_det, score=best_score)
            )
            survivors = []
            for score, det in pool:
                weight = rescore_weight(cfg.rule, iou(best_det.box, det.box))
                new_score = score * weight
                if new_score >= cfg.score_threshold:
                    survivors.append([new_score, det])
            pool = survivors
    return _cap_and_order(per_image, cfg.max_detections_per_image)
