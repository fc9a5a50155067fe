"""Calibration-error metrics and reliability-diagram bin statistics."""

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, LabelsRequiredError
from .numerics import PROB_EPS, softmax

DEFAULT_BINS = 15


@dataclass(frozen=True)
class PredictionBatch:
    """Model outputs for a set of samples.

    ``logits`` is an (n, C) matrix; ``labels`` is an optional length-n
    vector of true class indices. Arrays are copied and frozen so a
    batch can be shared freely across threads.
    """

    logits: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        logits = np.array(self.logits, dtype=np.float64)
        if logits.ndim != 2 or logits.shape[0] < 1 or logits.shape[1] < 2:
            raise InvalidInputError(f"logits must be (n>=1, C>=2), got shape {logits.shape}")
        if not np.all(np.isfinite(logits)):
            raise InvalidInputError("logits must be finite")
        logits.setflags(write=False)
        object.__setattr__(self, "logits", logits)
        if self.labels is not None:
            labels = np.array(self.labels, dtype=np.int64)
            if labels.shape != (logits.shape[0],):
                raise InvalidInputError("labels must be a length-n vector")
            if labels.min() < 0 or labels.max() >= logits.shape[1]:
                raise InvalidInputError("labels must lie in [0, C)")
            labels.setflags(write=False)
            object.__setattr__(self, "labels", labels)

    @property
    def n(self):
        return self.logits.shape[0]

    @property
    def num_classes(self):
        return self.logits.shape[1]

    @property
    def has_labels(self):
        return self.labels is not None

    def probabilities(self):
        """Row-wise softmax of the logits."""
        return softmax(self.logits)

    def predictions(self):
        """Predicted class per sample (argmax, lowest index on ties)."""
        return np.argmax(self.logits, axis=1)

    def confidences(self):
        """Max softmax probability per sample."""
        return np.max(self.probabilities(), axis=1)

    def correct(self):
        """Boolean correctness flags; requires labels."""
        if self.labels is None:
            raise LabelsRequiredError("correctness flags require labels")
        return self.predictions() == self.labels

    def accuracy(self):
        return float(np.mean(self.correct()))


@dataclass(frozen=True)
class BinStats:
    """Per-bin accuracy/confidence records over an equal-width partition of (0, 1]."""

    bin_count: int
    lower: np.ndarray
    upper: np.ndarray
    count: np.ndarray
    accuracy: np.ndarray
    confidence: np.ndarray
    n: int = field(default=0)


def _require_labels(batch):
    if not batch.has_labels:
        raise LabelsRequiredError("operation requires a labeled batch")


def _bin_index(confidences, num_bins):
    # (lower, upper] membership; a confidence of exactly 0 goes to bin 1.
    edges = np.linspace(0.0, 1.0, num_bins + 1)
    idx = np.searchsorted(edges, confidences, side="left") - 1
    return np.clip(idx, 0, num_bins - 1), edges


def reliability_bins(batch, num_bins=DEFAULT_BINS):
    """Bin statistics behind reliability diagrams and ECE.

    Samples fall into the bin whose (lower, upper] interval contains
    their confidence. Empty bins are recorded with count 0.
    """
    _require_labels(batch)
    if num_bins < 1:
        raise InvalidInputError("num_bins must be >= 1")
    conf = batch.confidences()
    correct = batch.correct().astype(np.float64)
    idx, edges = _bin_index(conf, num_bins)

    count = np.bincount(idx, minlength=num_bins)
    acc = np.zeros(num_bins)
    mean_conf = np.zeros(num_bins)
    nonempty = count > 0
    acc[nonempty] = np.bincount(idx, weights=correct, minlength=num_bins)[nonempty] / count[nonempty]
    mean_conf[nonempty] = np.bincount(idx, weights=conf, minlength=num_bins)[nonempty] / count[nonempty]

    return BinStats(
        bin_count=num_bins,
        lower=edges[:-1],
        upper=edges[1:],
        count=count,
        accuracy=acc,
        confidence=mean_conf,
        n=batch.n,
    )


def ece(batch, num_bins=DEFAULT_BINS):
    """Expected calibration error: bin-weighted mean |accuracy - confidence|."""
    stats = reliability_bins(batch, num_bins)
    weights = stats.count / stats.n
    return float(np.sum(weights * np.abs(stats.accuracy - stats.confidence)))


def mean_nll(batch):
    """Mean per-sample negative log-likelihood over a labeled batch."""
    _require_labels(batch)
    p = batch.probabilities()
    picked = p[np.arange(batch.n), batch.labels]
    return float(np.mean(-np.log(np.maximum(picked, PROB_EPS))))


def mean_brier(batch):
    """Mean per-sample Brier score (1/C normalization) over a labeled batch."""
    _require_labels(batch)
    p = batch.probabilities()
    onehot = np.zeros_like(p)
    onehot[np.arange(batch.n), batch.labels] = 1.0
    return float(np.mean(np.sum((p - onehot) ** 2, axis=1) / batch.num_classes))


def bin_stats_to_csv(stats, path_or_file):
    """Write BinStats as CSV: bin_lower, bin_upper, count, accuracy, confidence."""
    rows = [
        (
            f"{stats.lower[m]:.10g}",
            f"{stats.upper[m]:.10g}",
            int(stats.count[m]),
            f"{stats.accuracy[m]:.10g}",
            f"{stats.confidence[m]:.10g}",
        )
        for m in range(stats.bin_count)
    ]
    if isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__"):
        with open(path_or_file, "w", newline="") as fh:
            _write_bin_rows(fh, rows)
    else:
        _write_bin_rows(path_or_file, rows)


def _write_bin_rows(fh, rows):
    writer = csv.writer(fh)
    writer.writerow(["bin_lower", "bin_upper", "count", "accuracy", "confidence"])
    writer.writerows(rows)


def bin_stats_csv_text(stats):
    """BinStats CSV as a string (used by tests and the CLI)."""
    buf = io.StringIO()
    bin_stats_to_csv(stats, buf)
    return buf.getvalue()
