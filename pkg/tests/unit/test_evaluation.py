"""Unit tests for history-length evaluation, reports and cell comparisons."""

import csv

import numpy as np
import pytest

from src.inception_video_predictor.core.metrics import baseline_copy_last
from src.inception_video_predictor.core.network import LayerConfig, build
from src.inception_video_predictor.exceptions import EvaluationError
from src.inception_video_predictor.models.report_models import ComparisonRow, EvalReport
from src.inception_video_predictor.services.evaluation import (
    EvaluationService,
    as_predictor,
    confidence_halfwidth,
    dump_frames,
    evaluate_history_curve,
    oracle_predictor,
    write_report_csv,
)
from src.inception_video_predictor.services.training import TrainConfig
from src.inception_video_predictor.utils.ppm import read_ppm


def tiny_network():
    return build([LayerConfig(3, 3, "inception_v1"), LayerConfig(3, 3, "inception_v1")], seed=0)


class TestHistoryCurve:
    """Test cases for per-history-length scoring."""

    def test_baseline_curve_on_a_moving_square(self, square_sequence):
        report = evaluate_history_curve(baseline_copy_last, [square_sequence], 10, model_name="baseline")
        assert report.history_lengths == list(range(1, 10))
        assert len(report.summaries) == 27
        assert report.curve("mae") == pytest.approx([1 / 32] * 9)
        assert all(s.ci95 == 0.0 and s.n == 1 for s in report.summaries)
        assert report.single_sample
        assert report.warnings

    def test_oracle_is_perfect(self, square_sequence):
        report = evaluate_history_curve(oracle_predictor, [square_sequence], 10)
        assert report.curve("mse") == [0.0] * 9
        assert report.curve("ssim") == pytest.approx([1.0] * 9)

    def test_aggregate_is_the_flat_mean(self, square_sequence, small_sequence):
        clips = [square_sequence.slice(0, 6), square_sequence.slice(3, 9)]
        report = evaluate_history_curve(baseline_copy_last, clips, 6)
        for metric in ("mae", "mse", "ssim"):
            assert report.aggregate[metric] == pytest.approx(np.mean(report.curve(metric)))
        assert not report.warnings

    def test_network_curve(self, small_sequence):
        report = evaluate_history_curve(tiny_network(), [small_sequence, small_sequence], 6, model_name="iv1")
        assert report.history_lengths == [1, 2, 3, 4, 5]
        assert all(s.ci95 == 0.0 for s in report.summaries)
        assert all(0.0 <= v <= 1.0 for v in report.curve("mse"))

    def test_source_id_joins_inputs(self, small_sequence, square_sequence):
        report = evaluate_history_curve(baseline_copy_last, [small_sequence, square_sequence.slice(0, 6)], 6)
        assert report.source_id.startswith("synthetic-seed3;")

    def test_sequence_too_short(self, small_sequence):
        with pytest.raises(EvaluationError) as excinfo:
            evaluate_history_curve(baseline_copy_last, [small_sequence], 10)
        assert excinfo.value.error_code == "SEQUENCE_TOO_SHORT"

    def test_empty_test_set(self):
        with pytest.raises(EvaluationError):
            evaluate_history_curve(baseline_copy_last, [], 10)

    def test_not_a_predictor(self):
        with pytest.raises(EvaluationError):
            as_predictor(42)

    def test_confidence_halfwidth(self):
        assert confidence_halfwidth([1.0, 3.0]) == pytest.approx(1.96)
        assert confidence_halfwidth([2.0]) == 0.0


class TestReports:
    """Test cases for report files and frame dumps."""

    def test_report_csv(self, temp_dir, square_sequence):
        reports = EvaluationService().evaluate_with_baseline(build(2, seed=0), [square_sequence], 10, "conv")
        path = write_report_csv(temp_dir / "report.csv", reports)
        with open(path, newline="") as f:
            rows = list(csv.reader(f))
        assert tuple(rows[0]) == EvalReport.CSV_HEADER
        assert len(rows) == 1 + 9 * 3 * 2
        assert {row[0] for row in rows[1:]} == {"conv", "baseline"}

    def test_dump_frames(self, temp_dir, small_sequence):
        written = dump_frames(tiny_network(), [small_sequence], 4, temp_dir / "frames")
        names = sorted(p.name for p in written)
        assert len(names) == 6
        assert "seq0_t1_pred.ppm" in names and "seq0_t3_true.ppm" in names
        truth = read_ppm(temp_dir / "frames" / "seq0_t2_true.ppm")
        expected = np.rint(small_sequence.frames[2].data[0] * 255).astype(np.uint8)
        np.testing.assert_array_equal(truth, expected)


class TestCompare:
    """Test cases for side-by-side cell comparison."""

    def test_all_cell_types_run(self, small_sequence):
        cfg = TrainConfig(steps=1, sequence_length=3, learning_rate=0.01)
        rows = EvaluationService().compare([small_sequence], layers=2, cfg=cfg)
        assert [r.model for r in rows] == ["conv", "iv1", "iv2"]
        assert [r.kernel_coefficient for r in rows] == [9, 35, 28]
        assert all(r.succeeded and r.mse is not None for r in rows)
        assert rows[0].to_params_row()[-1] == "ok"

    def test_failures_are_recorded_per_row(self, small_sequence):
        cfg = TrainConfig(steps=1, sequence_length=10)
        rows = EvaluationService().compare([small_sequence], layers=2, cfg=cfg, cell_types=("conv", "inception_v2"))
        assert len(rows) == 2
        assert all(r.error_code == "SEQUENCE_TOO_SHORT" for r in rows)
        assert rows[1].to_row() == ["iv2", 2, "", "", ""]
        assert rows[1].to_params_row()[2] == 28
        assert rows[1].to_params_row()[-1].startswith("failed: ")

    def test_row_headers(self):
        assert ComparisonRow.CSV_HEADER == ("model", "layers", "mae", "mse", "ssim")
        assert ComparisonRow.PARAMS_CSV_HEADER[2] == "per_gate_kernel_elems"
