"""Greedy NMS and soft rescoring variants, with evaluation and tooling."""

from ._kernels import DEFAULT_BACKEND, available_backends
from .geometry import BBox, area, iou
from .suppression import (
    Detection,
    Gaussian,
    Hard,
    Linear,
    RescoreRule,
    SuppressionConfig,
    reference_suppress,
    rescore_weight,
    rule_from_name,
    suppress_all,
    suppress_group,
)
from .evaluation import (
    EvalConfig,
    EvalSummary,
    GroundTruth,
    SweepRow,
    average_precision,
    evaluate,
    match_detections,
    sweep,
)
from .synth import SynthConfig, crowded_scene_config, generate

__all__ = [
    "BBox",
    "area",
    "iou",
    "Detection",
    "Hard",
    "Linear",
    "Gaussian",
    "RescoreRule",
    "SuppressionConfig",
    "rescore_weight",
    "rule_from_name",
    "suppress_group",
    "suppress_all",
    "reference_suppress",
    "GroundTruth",
    "EvalConfig",
    "EvalSummary",
    "SweepRow",
    "match_detections",
    "average_precision",
    "evaluate",
    "sweep",
    "SynthConfig",
    "crowded_scene_config",
    "generate",
    "DEFAULT_BACKEND",
    "available_backends",
]

__version__ = "0.1.0"
