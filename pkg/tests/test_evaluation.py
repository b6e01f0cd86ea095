import numpy as np
import pytest

from nmskit import (
    BBox,
    Detection,
    EvalConfig,
    GroundTruth,
    average_precision,
    evaluate,
    match_detections,
    sweep,
)
from oracles import brute_force_eval, random_micro_dataset

GRID = tuple(round(0.01 * i, 2) for i in range(101))


def det(x1, y1, x2, y2, score, class_id=0, image_id=0, src=0):
    return Detection(BBox(x1, y1, x2, y2), score, class_id, image_id, src)


def gt(x1, y1, x2, y2, class_id=0, image_id=0):
    return GroundTruth(BBox(x1, y1, x2, y2), class_id, image_id)


class TestMatchDetections:
    def test_single_tp(self):
        flags, count = match_detections(
            [det(0, 0, 10, 10, 0.9)], [gt(0, 0.5, 10, 10.5)], 0.5
        )
        assert list(flags) == [True]
        assert count == 1

    def test_duplicate_is_fp(self):
        dets = [det(0, 0, 10, 10, 0.9, src=0), det(0, 1, 10, 11, 0.8, src=1)]
        flags, count = match_detections(dets, [gt(0, 0, 10, 10)], 0.5)
        assert list(flags) == [True, False]
        assert count == 1

    def test_below_threshold_is_fp(self):
        # iou = 45/155 with the shifted gt, well below 0.5
        flags, _ = match_detections([det(0, 0, 10, 10, 0.9)], [gt(5.5, 0, 15.5, 10)], 0.5)
        assert list(flags) == [False]

    def test_mixed_classes_rejected(self):
        with pytest.raises(ValueError, match="single class"):
            match_detections([det(0, 0, 1, 1, 0.9, class_id=0)], [gt(0, 0, 1, 1, class_id=1)], 0.5)

    def test_matches_highest_iou_unmatched_gt(self):
        # the higher-scored detection takes the better-overlapping gt
        dets = [det(0, 0, 10, 10, 0.9, src=0), det(0, 0, 10, 12, 0.8, src=1)]
        gts = [gt(0, 0, 10, 10), gt(0, 0, 10, 14)]
        flags, _ = match_detections(dets, gts, 0.5)
        assert list(flags) == [True, True]

    def test_only_same_image_gts_match(self):
        flags, _ = match_detections(
            [det(0, 0, 10, 10, 0.9, image_id=0)], [gt(0, 0, 10, 10, image_id=1)], 0.5
        )
        assert list(flags) == [False]


class TestAveragePrecision:
    def test_single_tp(self):
        assert average_precision([True], 1, GRID) == 1.0

    def test_trailing_fp_does_not_reduce(self):
        assert average_precision([True, False], 1, GRID) == 1.0

    def test_leading_fp_halves(self):
        assert average_precision([False, True], 1, GRID) == pytest.approx(0.5, abs=1e-12)

    def test_no_detections(self):
        assert average_precision([], 3, GRID) == 0.0

    def test_zero_gt_returns_zero(self):
        assert average_precision([False, False], 0, GRID) == 0.0

    def test_duplicate_fp_below_lowest_tp_no_change(self):
        base = [True, False, True]
        extended = base + [False]
        assert average_precision(extended, 2, GRID) == average_precision(base, 2, GRID)


class TestEvaluate:
    def test_perfect_detections(self):
        gts = [gt(0, 0, 10, 10, 0, 0), gt(30, 30, 50, 50, 1, 0), gt(5, 5, 25, 25, 0, 1)]
        dets = [
            Detection(g.box, 1.0, g.class_id, g.image_id, i) for i, g in enumerate(gts)
        ]
        summary = evaluate(dets, gts)
        assert summary.mean_ap == 1.0
        assert summary.ap_at_05 == 1.0
        assert all(v == 1.0 for v in summary.ar_at_k.values())

    def test_fp_tp_case_reduces_to_ap_example(self):
        gts = [gt(0, 0, 10, 10)]
        dets = [
            det(50, 50, 60, 60, 0.9, src=0),   # FP
            det(0, 0, 10, 10, 0.8, src=1),     # TP
        ]
        summary = evaluate(dets, gts, EvalConfig(overlap_thresholds=(0.5,)))
        assert summary.mean_ap == pytest.approx(0.5, abs=1e-12)

    def test_empty_gts_rejected(self):
        with pytest.raises(ValueError, match="ground-truth"):
            evaluate([det(0, 0, 1, 1, 0.5)], [])

    def test_matches_brute_force_oracle(self):
        rng = np.random.Generator(np.random.PCG64(99))
        thresholds = (0.5, 0.75, 0.95)
        cfg = EvalConfig(overlap_thresholds=thresholds)
        checked = 0
        while checked < 100:
            dets, gts = random_micro_dataset(rng)
            if not gts:
                continue
            checked += 1
            summary = evaluate(dets, gts, cfg)
            ap_oracle, mean_oracle = brute_force_eval(dets, gts, thresholds, GRID)
            for key, value in ap_oracle.items():
                assert summary.ap_per_class_per_threshold[key] == pytest.approx(value, abs=1e-9)
            assert summary.mean_ap == pytest.approx(mean_oracle, abs=1e-9)

    def test_ar_monotone_in_k(self):
        rng = np.random.Generator(np.random.PCG64(7))
        cfg = EvalConfig(overlap_thresholds=(0.5, 0.75), max_det_caps=(1, 2, 3, 5, 10))
        checked = 0
        while checked < 40:
            dets, gts = random_micro_dataset(rng)
            if not gts or not dets:
                continue
            checked += 1
            summary = evaluate(dets, gts, cfg)
            values = [summary.ar_at_k[k] for k in sorted(summary.ar_at_k)]
            assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))

    def test_rank_invariance_under_monotone_transform(self):
        rng = np.random.Generator(np.random.PCG64(23))
        cfg = EvalConfig(overlap_thresholds=(0.5, 0.75))
        checked = 0
        while checked < 40:
            dets, gts = random_micro_dataset(rng)
            if not gts or not dets:
                continue
            checked += 1
            summary = evaluate(dets, gts, cfg)
            squashed = [
                Detection(d.box, d.score**2 * 0.5 + 0.1, d.class_id, d.image_id, d.source_index)
                for d in dets
            ]
            summary2 = evaluate(squashed, gts, cfg)
            assert summary2.mean_ap == pytest.approx(summary.mean_ap, abs=1e-12)
            assert summary2.ar_at_k == summary.ar_at_k

    def test_removing_a_tp_never_increases_ap(self):
        rng = np.random.Generator(np.random.PCG64(29))
        checked = 0
        while checked < 60:
            dets, gts = random_micro_dataset(rng)
            gts = [g for g in gts if g.class_id == 0]
            dets = [d for d in dets if d.class_id == 0]
            if not gts or not dets:
                continue
            flags, count = match_detections(dets, gts, 0.5)
            if not flags.any():
                continue
            checked += 1
            ap_before = average_precision(flags, count, GRID)
            order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, dets[i].source_index))
            tp_pos = [p for p in range(len(order)) if flags[p]]
            drop = order[tp_pos[int(rng.integers(0, len(tp_pos)))]]
            reduced = [d for i, d in enumerate(dets) if i != drop]
            flags2, count2 = match_detections(reduced, gts, 0.5)
            assert average_precision(flags2, count2, GRID) <= ap_before + 1e-12

    def test_classes_without_gt_are_excluded(self):
        gts = [gt(0, 0, 10, 10, class_id=0)]
        dets = [
            det(0, 0, 10, 10, 0.9, class_id=0, src=0),
            det(50, 50, 60, 60, 0.9, class_id=7, src=1),  # no gt for class 7
        ]
        summary = evaluate(dets, gts, EvalConfig(overlap_thresholds=(0.5,)))
        assert summary.mean_ap == 1.0
        assert set(k[0] for k in summary.ap_per_class_per_threshold) == {0}

    def test_area_stratification(self):
        # one small object (16x16 < 32^2), one large (200x200 > 96^2)
        gts = [gt(0, 0, 16, 16, image_id=0), gt(100, 100, 300, 300, image_id=0)]
        dets = [
            det(0, 0, 16, 16, 0.9, src=0),
            det(100, 100, 300, 300, 0.8, src=1),
        ]
        summary = evaluate(dets, gts, EvalConfig(overlap_thresholds=(0.5,)))
        assert summary.ap_by_area["small"] == 1.0
        assert summary.ap_by_area["large"] == 1.0
        assert "medium" not in summary.ap_by_area

    def test_detection_matched_to_out_of_range_gt_is_ignored(self):
        # a duplicate of the large gt must not count as FP in the small range
        gts = [gt(0, 0, 16, 16, image_id=0), gt(100, 100, 300, 300, image_id=0)]
        dets = [
            det(100, 100, 300, 300, 0.95, src=0),  # matches large gt
            det(101, 101, 299, 299, 0.92, src=1),  # duplicate of large gt: FP overall
            det(0, 0, 16, 16, 0.5, src=2),         # matches small gt
        ]
        summary = evaluate(dets, gts, EvalConfig(overlap_thresholds=(0.5,)))
        assert summary.ap_by_area["small"] == 1.0

    def test_pr_curves_optional(self):
        gts = [gt(0, 0, 10, 10)]
        dets = [det(0, 0, 10, 10, 0.9)]
        assert evaluate(dets, gts).pr_curves is None
        summary = evaluate(dets, gts, include_pr_curves=True)
        assert summary.pr_curves
        curve = summary.pr_curves[(0, 0.5)]
        assert curve.shape == (101,)
        assert curve.max() <= 1.0

    def test_config_validation(self):
        with pytest.raises(ValueError):
            EvalConfig(overlap_thresholds=(0.5, 0.5))
        with pytest.raises(ValueError):
            EvalConfig(overlap_thresholds=())
        with pytest.raises(ValueError):
            EvalConfig(recall_grid=(0.0, 0.5))
        with pytest.raises(ValueError):
            EvalConfig(max_det_caps=(0,))


class TestSweep:
    def _dataset(self):
        rng = np.random.Generator(np.random.PCG64(55))
        while True:
            dets, gts = random_micro_dataset(rng)
            if gts and dets:
                return dets, gts

    def test_single_value_matches_direct_run(self):
        from nmskit import Hard, SuppressionConfig, suppress_all

        dets, gts = self._dataset()
        cfg = EvalConfig(overlap_thresholds=(0.5, 0.75))
        rows = sweep(dets, gts, "hard", [0.4], cfg)
        assert len(rows) == 1
        direct = evaluate(
            suppress_all(dets, SuppressionConfig(Hard(0.4))), gts, cfg
        )
        assert rows[0].mean_ap == pytest.approx(direct.mean_ap, abs=1e-12)
        assert rows[0].param_name == "nt"

    def test_six_values_six_rows(self):
        dets, gts = self._dataset()
        cfg = EvalConfig(overlap_thresholds=(0.5,))
        rows = sweep(dets, gts, "gaussian", [0.1, 0.3, 0.5, 0.7, 0.9, 1.1], cfg)
        assert len(rows) == 6
        assert all(r.param_name == "sigma" for r in rows)

    def test_empty_params_rejected(self):
        dets, gts = self._dataset()
        with pytest.raises(ValueError, match="parameter"):
            sweep(dets, gts, "hard", [], EvalConfig())
