"""Command-line front door: suppress, eval, sweep, synth, bench.

Data and metrics go to files or stdout; progress and diagnostics go to
stderr. Every subcommand is deterministic: the same files and flags produce
byte-identical outputs. --print-config dumps the resolved configuration as
JSON and exits without doing any work.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import _kernels, bench as bench_mod, io as io_mod
from .evaluation import EvalConfig, evaluate, sweep
from .suppression import SuppressionConfig, rule_from_name, suppress_all
from .synth import SynthConfig, crowded_scene_config, generate


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated floats, got {text!r}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _print_config(args: argparse.Namespace) -> None:
    resolved = {
        k: v for k, v in sorted(vars(args).items()) if k not in ("func", "print_config")
    }
    print(json.dumps(resolved, default=str, sort_keys=True))


def _cmd_suppress(args: argparse.Namespace) -> int:
    if args.print_config:
        _print_config(args)
        return 0
    rule = rule_from_name(args.method, nt=args.nt, sigma=args.sigma)
    cfg = SuppressionConfig(
        rule=rule,
        score_threshold=args.score_thresh,
        max_detections_per_image=args.max_det,
    )
    dets = io_mod.load_detections(args.dets)
    kept = suppress_all(dets, cfg, threads=args.threads)
    io_mod.save_detections(kept, args.out)
    print(f"suppress: {len(dets)} detections in, {len(kept)} out", file=sys.stderr)
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    if args.print_config:
        _print_config(args)
        return 0
    cfg = EvalConfig(
        overlap_thresholds=tuple(args.ot_grid) if args.ot_grid else EvalConfig().overlap_thresholds,
        max_det_caps=tuple(args.max_det) if args.max_det else EvalConfig().max_det_caps,
    )
    dets = io_mod.load_detections(args.dets)
    gts = io_mod.load_annotations(args.gt)
    summary = evaluate(dets, gts, cfg)
    io_mod.save_report(summary, args.report)
    print(f"{summary.mean_ap:.4f}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    if args.print_config:
        _print_config(args)
        return 0
    cfg = EvalConfig(
        overlap_thresholds=tuple(args.ot_grid) if args.ot_grid else EvalConfig().overlap_thresholds,
    )
    dets = io_mod.load_detections(args.dets)
    gts = io_mod.load_annotations(args.gt)
    rows = sweep(
        dets,
        gts,
        args.method,
        args.params,
        cfg,
        score_threshold=args.score_thresh,
        max_detections_per_image=args.max_det,
        threads=args.threads,
    )
    io_mod.save_report(rows, args.report)
    print(f"sweep: wrote {len(rows)} rows", file=sys.stderr)
    return 0


def _synth_config(args: argparse.Namespace) -> SynthConfig:
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            data = json.load(fh)
        for key in ("canvas", "objects_per_image", "duplicates_per_object", "fp_per_image",
                    "object_size_range", "fp_score_range"):
            if key in data:
                data[key] = tuple(data[key])
        return SynthConfig(**data)
    if args.preset == "crowded":
        return crowded_scene_config(num_images=args.images, seed=args.seed)
    return SynthConfig(
        num_images=args.images,
        canvas=(args.canvas[0], args.canvas[1]),
        objects_per_image=(args.objects[0], args.objects[1]),
        crowding=args.crowding,
        duplicates_per_object=(args.duplicates[0], args.duplicates[1]),
        jitter_scale=args.jitter,
        score_noise=args.score_noise,
        fp_per_image=(args.fp[0], args.fp[1]),
        num_classes=args.classes,
        seed=args.seed,
    )


def _cmd_synth(args: argparse.Namespace) -> int:
    cfg = _synth_config(args)
    if args.print_config:
        print(json.dumps(cfg.__dict__, default=list, sort_keys=True))
        return 0
    gts, dets = generate(cfg)
    io_mod.save_annotations(gts, args.out_gt)
    io_mod.save_detections(dets, args.out_dets)
    print(f"synth: wrote {len(gts)} ground truths, {len(dets)} detections", file=sys.stderr)
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    if args.print_config:
        _print_config(args)
        return 0
    if args.backend == "both":
        backends = list(_kernels.available_backends())
    elif args.backend:
        backends = [args.backend]
    else:
        backends = [_kernels.DEFAULT_BACKEND]
    rows, slopes = bench_mod.run_bench(
        args.sizes,
        method=args.method,
        backends=backends,
        score_threshold=args.score_thresh,
        repeats=args.repeats,
    )
    print("n " + " ".join(f"seconds_{b}" for b in backends))
    for row in rows:
        print(f"{row.n} " + " ".join(f"{row.seconds[b]:.6f}" for b in backends))
    for b in backends:
        slope = slopes[b]
        if slope is None:
            print(f"slope_{b} undefined (need at least 2 sizes)")
        else:
            print(f"slope_{b} {slope:.3f}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nmskit",
        description="Greedy NMS and soft rescoring, COCO-style evaluation, "
        "synthetic crowded scenes, and kernel benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("suppress", help="rescore a detection file")
    p.add_argument("--dets", required=True, help="input detections JSON")
    p.add_argument("--method", required=True, choices=["hard", "linear", "gaussian"])
    p.add_argument("--nt", type=float, default=None,
                   help="overlap threshold for hard/linear (default 0.3)")
    p.add_argument("--sigma", type=float, default=None,
                   help="gaussian decay width (default 0.5)")
    p.add_argument("--score-thresh", type=float, default=1e-3,
                   help="discard rescored detections below this (default 1e-3)")
    p.add_argument("--max-det", type=int, default=400,
                   help="per-image detection cap (default 400)")
    p.add_argument("--out", required=True, help="output detections JSON")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--print-config", action="store_true")
    p.set_defaults(func=_cmd_suppress)

    p = sub.add_parser("eval", help="evaluate detections against ground truth")
    p.add_argument("--dets", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--ot-grid", type=_float_list, default=None,
                   help="comma-separated overlap thresholds (default 0.50..0.95)")
    p.add_argument("--max-det", type=_int_list, default=None,
                   help="comma-separated AR caps (default 10,100)")
    p.add_argument("--report", required=True, help="output CSV report")
    p.add_argument("--print-config", action="store_true")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("sweep", help="suppress+evaluate over a parameter grid")
    p.add_argument("--dets", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--method", required=True, choices=["hard", "linear", "gaussian"])
    p.add_argument("--params", type=_float_list, required=True,
                   help="comma-separated parameter values (nt or sigma)")
    p.add_argument("--ot-grid", type=_float_list, default=None)
    p.add_argument("--score-thresh", type=float, default=1e-3)
    p.add_argument("--max-det", type=int, default=400)
    p.add_argument("--report", required=True)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--print-config", action="store_true")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("synth", help="generate a seeded synthetic dataset")
    p.add_argument("--config", default=None, help="JSON file of SynthConfig fields")
    p.add_argument("--preset", choices=["crowded"], default=None)
    p.add_argument("--images", type=int, default=20)
    p.add_argument("--canvas", type=float, nargs=2, default=[640.0, 480.0],
                   metavar=("W", "H"))
    p.add_argument("--objects", type=int, nargs=2, default=[3, 8], metavar=("LO", "HI"))
    p.add_argument("--crowding", type=float, default=0.5)
    p.add_argument("--duplicates", type=int, nargs=2, default=[1, 3], metavar=("LO", "HI"))
    p.add_argument("--jitter", type=float, default=0.05)
    p.add_argument("--score-noise", type=float, default=0.02)
    p.add_argument("--fp", type=int, nargs=2, default=[1, 4], metavar=("LO", "HI"))
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-gt", required=True)
    p.add_argument("--out-dets", required=True)
    p.add_argument("--print-config", action="store_true")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("bench", help="time the suppression kernel across sizes")
    p.add_argument("--sizes", type=_int_list, default=[500, 1000, 2000, 4000])
    p.add_argument("--method", choices=["hard", "linear", "gaussian"], default="gaussian")
    p.add_argument("--backend", choices=["numba", "numpy", "both"], default=None)
    p.add_argument("--score-thresh", type=float, default=0.0,
                   help="0 keeps every box live so the full quadratic loop is measured")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--print-config", action="store_true")
    p.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
