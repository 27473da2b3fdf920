"""Result models for parameter reports, evaluation and cell comparisons."""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

METRIC_NAMES = ("mae", "mse", "ssim")


@dataclass
class ParamBreakdown:
    """Learnable scalar counts of one cell or network."""
    cell_type: str
    per_gate_kernel_elems: int
    kernel_scalars: int
    biases: int
    total: int
    per_gate: Dict[str, int] = field(default_factory=dict)

    # Absolute totals quoted for the original 2-cell comparison; reported, never asserted.
    REFERENCE_TOTALS = {"inception_v1": 6595, "conv": 1081}

    @property
    def reference_total(self) -> Optional[int]:
        return self.REFERENCE_TOTALS.get(self.cell_type)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "cell_type": self.cell_type,
            "per_gate_kernel_elems": self.per_gate_kernel_elems,
            "kernel_scalars": self.kernel_scalars,
            "biases": self.biases,
            "total": self.total,
            "per_gate": dict(self.per_gate),
            "reference_total": self.reference_total,
        }


@dataclass
class MetricSummary:
    """One metric at one history length."""
    history_len: int
    metric: str
    mean: float
    ci95: float
    n: int

    def to_row(self, model: str, source_id: str) -> List[Any]:
        return [model, source_id, self.history_len, self.metric, repr(self.mean), repr(self.ci95), self.n]


@dataclass
class EvalReport:
    """History-length curves of MAE, MSE and SSIM for one predictor on one test set."""
    model: str
    source_id: str
    summaries: List[MetricSummary] = field(default_factory=list)
    aggregate: Dict[str, float] = field(default_factory=dict)
    sample_count: int = 0
    warnings: List[str] = field(default_factory=list)

    CSV_HEADER = ("model", "source_id", "history_len", "metric", "mean", "ci95", "n")

    @property
    def history_lengths(self) -> List[int]:
        return sorted({s.history_len for s in self.summaries})

    @property
    def single_sample(self) -> bool:
        return self.sample_count == 1

    def curve(self, metric: str) -> List[float]:
        """Mean of ``metric`` for each history length, in order."""
        by_len = {s.history_len: s.mean for s in self.summaries if s.metric == metric}
        return [by_len[k] for k in sorted(by_len)]

    def rows(self) -> List[List[Any]]:
        return [s.to_row(self.model, self.source_id) for s in self.summaries]


@dataclass
class ComparisonRow:
    """One model's line in a side-by-side cell comparison."""
    model: str
    layers: int
    mae: Optional[float] = None
    mse: Optional[float] = None
    ssim: Optional[float] = None
    kernel_coefficient: Optional[int] = None
    params: Optional[int] = None
    error: Optional[str] = None
    error_code: Optional[str] = None

    CSV_HEADER = ("model", "layers", "mae", "mse", "ssim")
    PARAMS_CSV_HEADER = ("model", "layers", "per_gate_kernel_elems", "params", "status")

    @property
    def succeeded(self) -> bool:
        return self.error is None

    def to_row(self) -> List[Any]:
        def fmt(value: Optional[float]) -> str:
            return "" if value is None else repr(value)

        return [self.model, self.layers, fmt(self.mae), fmt(self.mse), fmt(self.ssim)]

    def to_params_row(self) -> List[Any]:
        return [
            self.model,
            self.layers,
            "" if self.kernel_coefficient is None else self.kernel_coefficient,
            "" if self.params is None else self.params,
            "ok" if self.succeeded else f"failed: {self.error}",
        ]


@dataclass
class TrainResult:
    """Outcome of a training run."""
    loss_trace: List[float]
    start_step: int
    final_step: int

    @property
    def final_loss(self) -> Optional[float]:
        return self.loss_trace[-1] if self.loss_trace else None

    def window_mean(self, first: bool, count: int) -> float:
        values = self.loss_trace[:count] if first else self.loss_trace[-count:]
        return sum(values) / len(values)
