"""History-length evaluation curves, report CSVs, frame dumps and cell comparisons."""

import csv
import math
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np

from ..core.metrics import METRICS, baseline_copy_last
from ..core.network import Network, build, rollout
from ..exceptions import EvaluationError, VideoPredictorError
from ..models.report_models import METRIC_NAMES, ComparisonRow, EvalReport, MetricSummary
from ..models.video_models import FrameSequence
from ..utils.parallel import parallel_map
from ..utils.ppm import write_ppm
from ..utils.validators import SHORT_CELL_NAMES
from .base import BaseService
from .training import TrainConfig, train

Z_95 = 1.96

# Maps a clip of T frames to T - 1 predictions of frames 1 .. T-1.
Predictor = Callable[[FrameSequence], FrameSequence]


def network_predictor(net: Network) -> Predictor:
    frozen = net.detached()
    return lambda clip: rollout(frozen, clip)[0]


def oracle_predictor(clip: FrameSequence) -> FrameSequence:
    """Returns the ground truth itself."""
    return FrameSequence(clip.frames[1:], source_id=f"{clip.source_id}:oracle")


def as_predictor(model: Union[Network, Predictor]) -> Predictor:
    if isinstance(model, Network):
        return network_predictor(model)
    if callable(model):
        return model
    raise EvaluationError(f"cannot evaluate a {type(model).__name__}", error_code="NOT_A_PREDICTOR")


def confidence_halfwidth(values: Sequence[float]) -> float:
    """Normal-approximation 95% half-width, 1.96 * sd / sqrt(n); 0 for a single value."""
    n = len(values)
    if n < 2:
        return 0.0
    return float(Z_95 * np.std(values, ddof=1) / math.sqrt(n))


def score_sequence(predictor: Predictor, seq: FrameSequence, length: int) -> Dict[str, List[float]]:
    """Per-metric scores for history lengths 1 .. length-1 of the first ``length`` frames."""
    clip = seq.slice(0, length)
    predictions = predictor(clip)
    if len(predictions) < length - 1:
        raise EvaluationError(
            f"predictor returned {len(predictions)} frames for a {length}-frame clip",
            error_code="SHORT_PREDICTION",
        )
    scores: Dict[str, List[float]] = {name: [] for name in METRIC_NAMES}
    for k in range(1, length):
        prediction, truth = predictions[k - 1], clip[k]
        for name in METRIC_NAMES:
            scores[name].append(METRICS[name](prediction, truth))
    return scores


def evaluate_history_curve(model: Union[Network, Predictor], test: Sequence[FrameSequence], length: int,
                           model_name: str = "model", source_id: Optional[str] = None,
                           workers: Optional[int] = None) -> EvalReport:
    """Score next-frame predictions for every history length 1 .. length-1 across ``test``."""
    if not test:
        raise EvaluationError("test set is empty", error_code="EMPTY_TEST_SET")
    if length < 2:
        raise EvaluationError("evaluation length must be at least 2", error_code="SEQUENCE_TOO_SHORT")
    for seq in test:
        if len(seq) < length:
            raise EvaluationError(
                f"sequence {seq.source_id!r} has {len(seq)} frames, evaluation needs {length}",
                error_code="SEQUENCE_TOO_SHORT",
            )

    predictor = as_predictor(model)
    per_sequence = parallel_map(lambda seq: score_sequence(predictor, seq, length), test, workers)

    n = len(per_sequence)
    report = EvalReport(
        model=model_name,
        source_id=source_id if source_id is not None else ";".join(s.source_id for s in test),
        sample_count=n,
    )
    for k in range(1, length):
        for name in METRIC_NAMES:
            values = [scores[name][k - 1] for scores in per_sequence]
            report.summaries.append(
                MetricSummary(history_len=k, metric=name, mean=float(np.mean(values)),
                              ci95=confidence_halfwidth(values), n=n)
            )
    for name in METRIC_NAMES:
        report.aggregate[name] = float(np.mean([v for scores in per_sequence for v in scores[name]]))
    if n == 1:
        report.warnings.append("single test sequence: confidence half-widths are reported as 0")
    return report


def write_report_csv(path: Union[str, Path], reports: Sequence[EvalReport]) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(EvalReport.CSV_HEADER)
        for report in reports:
            writer.writerows(report.rows())
    return target


def dump_frames(net: Network, test: Sequence[FrameSequence], length: int, directory: Union[str, Path]) -> List[Path]:
    """Write ``seq{S}_t{T}_{pred|true}.ppm`` for every scored target frame."""
    out_dir = Path(directory)
    out_dir.mkdir(parents=True, exist_ok=True)
    predictor = network_predictor(net)
    written = []
    for s, seq in enumerate(test):
        clip = seq.slice(0, length)
        predictions = predictor(clip)
        for t in range(1, length):
            written.append(write_ppm(out_dir / f"seq{s}_t{t}_pred.ppm", predictions[t - 1]))
            written.append(write_ppm(out_dir / f"seq{s}_t{t}_true.ppm", clip[t]))
    return written


class EvaluationService(BaseService):
    """Evaluates checkpoints against the copy-last baseline and compares cell types."""

    def __init__(self):
        super().__init__("evaluation")

    def evaluate_with_baseline(self, net: Network, test: Sequence[FrameSequence], length: int,
                               model_name: str = "model") -> List[EvalReport]:
        """Curves for ``net`` and for the copy-last baseline on the same clips."""
        reports = [
            evaluate_history_curve(net, test, length, model_name=model_name),
            evaluate_history_curve(baseline_copy_last, test, length, model_name="baseline"),
        ]
        for report in reports:
            for warning in report.warnings:
                self.logger.warning("%s: %s", report.model, warning)
            self._log_event("Evaluated", {"model": report.model, **report.aggregate})
        return reports

    def compare(self, data: Sequence[FrameSequence], layers: int, cfg: TrainConfig,
                test: Optional[Sequence[FrameSequence]] = None, frame_channels: Optional[int] = None,
                cell_types: Sequence[str] = ("conv", "inception_v1", "inception_v2")) -> List[ComparisonRow]:
        """Train each cell type with the same seed and budget, then score it.

        A failing model is recorded in its row and the others still run.
        """
        test = list(test) if test else list(data)
        channels = frame_channels or data[0].frame_shape[1]
        rows = []
        for cell_type in cell_types:
            row = ComparisonRow(model=SHORT_CELL_NAMES[cell_type], layers=layers)
            try:
                net = build(layers, seed=cfg.seed, cell_type=cell_type, frame_channels=channels,
                            dtype=cfg.precision)
                breakdown = net.param_breakdowns()[0]
                row.kernel_coefficient = breakdown.per_gate_kernel_elems
                row.params = net.parameter_count()
                train(net, data, cfg)
                report = evaluate_history_curve(net, test, cfg.sequence_length, model_name=row.model)
                row.mae, row.mse, row.ssim = (report.aggregate[m] for m in ("mae", "mse", "ssim"))
            except VideoPredictorError as e:
                self.logger.error("Comparison run for %s failed: %s", cell_type, e)
                row.error = e.message
                row.error_code = e.error_code
            rows.append(row)
        return rows

    def health_check(self) -> bool:
        return True
