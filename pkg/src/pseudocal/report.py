"""Experiment assembly: method comparison tables and sensitivity sweeps.

Each calibration method is fitted strictly under its legal data access:
source-free methods see only unlabeled target inputs, the affine
baselines see the labeled source validation split, and the oracle sees
the target labels it is defined by.
"""

import csv
import io
import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import pseudo_target, scalers, synthetic
from .errors import DataAccessError, InvalidInputError
from .metrics import (
    DEFAULT_BINS,
    PredictionBatch,
    ece,
    mean_brier,
    mean_nll,
    reliability_bins,
)

METHODS = (
    "none",
    "temp_oracle",
    "vector",
    "matrix",
    "pseudocal",
    "pseudo_label",
    "filtered_pl",
    "pseudocal_same",
    "beta_mixup",
    "ensemble",
)

_SOURCE_METHODS = ("vector", "matrix")
_ORACLE_METHODS = ("temp_oracle",)

DEFAULT_ENSEMBLE_SIZE = 5


@dataclass(frozen=True)
class MethodResult:
    ece: float
    nll: float
    brier: float
    accuracy: float
    temperature: float | None = None


@dataclass(frozen=True)
class ExperimentResult:
    """Per-method calibration outcomes on one (task, model, seed) cell."""

    meta: dict
    methods: dict
    correspondence_rate: float | None = None
    wall_clock: dict = field(default_factory=dict)
    bin_stats: dict = field(default_factory=dict, repr=False)

    def to_dict(self, include_timing=False):
        doc = {
            "schema_version": synthetic.SCHEMA_VERSION,
            "meta": self.meta,
            "methods": {
                name: {
                    "ece": r.ece,
                    "nll": r.nll,
                    "brier": r.brier,
                    "accuracy": r.accuracy,
                    "temperature": r.temperature,
                }
                for name, r in self.methods.items()
            },
            "correspondence_rate": self.correspondence_rate,
        }
        if include_timing:
            doc["wall_clock_seconds"] = self.wall_clock
        return doc

    def to_json(self, include_timing=False):
        return json.dumps(self.to_dict(include_timing), sort_keys=True, indent=2) + "\n"

    def table_text(self):
        header = f"{'method':<15} {'ECE':>8} {'NLL':>8} {'Brier':>8} {'T':>8} {'accuracy':>9}"
        lines = [header, "-" * len(header)]
        for name in self.methods:
            r = self.methods[name]
            t = f"{r.temperature:.4f}" if r.temperature is not None else "-"
            lines.append(
                f"{name:<15} {r.ece:>8.4f} {r.nll:>8.4f} {r.brier:>8.4f} {t:>8} {r.accuracy:>9.4f}"
            )
        if self.correspondence_rate is not None:
            lines.append(f"correspondence rate: {self.correspondence_rate:.4f}")
        return "\n".join(lines) + "\n"


def _validate_access(methods, task):
    for m in methods:
        if m not in METHODS:
            raise InvalidInputError(f"unknown method {m!r}; valid: {', '.join(METHODS)}")
        if m in _ORACLE_METHODS and not task.has_target_labels:
            raise DataAccessError(f"method {m!r} requires target labels", method=m)
        if m in _SOURCE_METHODS and not task.has_source:
            raise DataAccessError(f"method {m!r} requires a labeled source split", method=m)
        if m == "ensemble" and not task.has_source:
            raise DataAccessError("method 'ensemble' requires source data to train on", method=m)


def _fit_method(name, model, task, mixup_cfg, seed, ensemble_size):
    target_inputs = task.target_inputs
    if name == "none":
        return scalers.identity(), None
    if name == "temp_oracle":
        batch = PredictionBatch(
            logits=model.predict_logits(target_inputs), labels=task.target_labels
        )
        return scalers.fit_oracle(batch), None
    if name in ("vector", "matrix"):
        batch = PredictionBatch(
            logits=model.predict_logits(task.source_val_inputs),
            labels=task.source_val_labels,
        )
        fit = scalers.fit_vector if name == "vector" else scalers.fit_matrix
        return fit(batch), None
    if name == "pseudocal":
        pseudo = pseudo_target.synthesize(model, target_inputs, mixup_cfg)
        cal = pseudo_target.fit_on_pseudo_set(model, pseudo, mixup_cfg.label_mode)
        return cal, pseudo
    if name == "pseudo_label":
        return pseudo_target.variant_pseudo_label(model, target_inputs), None
    if name == "filtered_pl":
        return pseudo_target.variant_filtered_pl(model, target_inputs), None
    if name == "pseudocal_same":
        return pseudo_target.variant_same_label(model, target_inputs, mixup_cfg), None
    if name == "beta_mixup":
        return pseudo_target.variant_beta_mixup(model, target_inputs, mixup_cfg), None
    if name == "ensemble":
        train_cfg = getattr(model, "train_config", {}) or {}
        ens = synthetic.ensemble_train(
            task,
            ensemble_size,
            seeds=list(range(seed, seed + ensemble_size)),
            epochs=train_cfg.get("epochs", synthetic.DEFAULT_EPOCHS),
            lr=train_cfg.get("lr", synthetic.DEFAULT_LR),
            gamma=train_cfg.get("gamma", 1.0),
        )
        return ens, None
    raise InvalidInputError(f"unknown method {name!r}")  # pragma: no cover


def evaluate_all(
    model,
    task,
    methods,
    bins=DEFAULT_BINS,
    seed=0,
    mixup_cfg=None,
    ensemble_size=DEFAULT_ENSEMBLE_SIZE,
):
    """Fit every requested method, apply it, and measure on the target."""
    methods = list(methods)
    _validate_access(methods, task)
    if mixup_cfg is None:
        mixup_cfg = pseudo_target.MixupConfig(seed=seed)

    base_logits = model.predict_logits(task.target_inputs)
    target_batch = PredictionBatch(logits=base_logits, labels=task.target_labels)

    results = {}
    wall_clock = {}
    bin_stats = {}
    correspondence = None
    for name in methods:
        t0 = time.perf_counter()
        fitted, pseudo = _fit_method(name, model, task, mixup_cfg, seed, ensemble_size)
        if name == "ensemble":
            scored = PredictionBatch(
                logits=fitted.predict_logits(task.target_inputs), labels=task.target_labels
            )
            temp = None
        else:
            scored = fitted.apply(target_batch)
            temp = fitted.temperature
        results[name] = MethodResult(
            ece=ece(scored, bins),
            nll=mean_nll(scored),
            brier=mean_brier(scored),
            accuracy=scored.accuracy(),
            temperature=temp,
        )
        bin_stats[name] = reliability_bins(scored, bins)
        if name == "pseudocal" and pseudo is not None and task.has_target_labels:
            correspondence = pseudo_target.correspondence_rate(
                model, pseudo, task.target_labels
            )
        wall_clock[name] = time.perf_counter() - t0

    meta = {
        "task": synthetic.spec_to_dict(task.spec),
        "source_val_fraction": task.val_fraction,
        "bins": bins,
        "seed": seed,
        "mixup": {
            "lam": mixup_cfg.lam,
            "lambda_policy": mixup_cfg.lambda_policy,
            "label_mode": mixup_cfg.label_mode,
            "pairing": mixup_cfg.pairing,
            "epochs": mixup_cfg.epochs,
            "seed": mixup_cfg.seed,
        },
        "methods": methods,
    }
    return ExperimentResult(
        meta=meta,
        methods=results,
        correspondence_rate=correspondence,
        wall_clock=wall_clock,
        bin_stats=bin_stats,
    )


def method_bins_to_csv(result, path_or_file):
    """Stacked reliability-bin CSV: one block of bins per evaluated method."""
    rows = []
    for name, stats in result.bin_stats.items():
        for m in range(stats.bin_count):
            rows.append(
                (
                    name,
                    f"{stats.lower[m]:.10g}",
                    f"{stats.upper[m]:.10g}",
                    int(stats.count[m]),
                    f"{stats.accuracy[m]:.10g}",
                    f"{stats.confidence[m]:.10g}",
                )
            )
    if isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__"):
        with open(path_or_file, "w", newline="") as fh:
            _write_method_bin_rows(fh, rows)
    else:
        _write_method_bin_rows(path_or_file, rows)


def _write_method_bin_rows(fh, rows):
    writer = csv.writer(fh)
    writer.writerow(["method", "bin_lower", "bin_upper", "count", "accuracy", "confidence"])
    writer.writerows(rows)


def lambda_sweep(model, task, lambdas, label_modes, seeds, bins=DEFAULT_BINS):
    """Mean target ECE per (mix ratio, label mode) cell, averaged over seeds."""
    lambdas = [float(l) for l in lambdas]
    for lam in lambdas:
        if not 0.5 < lam < 1.0:
            raise InvalidInputError(f"sweep mix ratios must lie in (0.5, 1.0), got {lam}")
    for mode in label_modes:
        if mode not in ("hard", "soft"):
            raise InvalidInputError(f"unknown label mode {mode!r}")
    if not seeds:
        raise InvalidInputError("sweep requires at least one seed")

    base_logits = model.predict_logits(task.target_inputs)
    target_batch = PredictionBatch(logits=base_logits, labels=task.target_labels)

    rows = []
    for lam in lambdas:
        for mode in label_modes:
            values = []
            for seed in seeds:
                cfg = pseudo_target.MixupConfig(lam=lam, label_mode=mode, seed=int(seed))
                cal = pseudo_target.calibrate(model, task.target_inputs, cfg)
                values.append(ece(cal.apply(target_batch), bins))
            rows.append(
                {
                    "lambda": lam,
                    "label_mode": mode,
                    "mean_ece": float(np.mean(values)),
                    "std_ece": float(np.std(values)),
                    "n_seeds": len(values),
                }
            )
    return rows


def sweep_to_csv(rows, path_or_file):
    if isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__"):
        with open(path_or_file, "w", newline="") as fh:
            _write_sweep_rows(fh, rows)
    else:
        _write_sweep_rows(path_or_file, rows)


def _write_sweep_rows(fh, rows):
    writer = csv.writer(fh)
    writer.writerow(["lambda", "label_mode", "mean_ece", "std_ece", "n_seeds"])
    for r in rows:
        writer.writerow(
            [
                f"{r['lambda']:.10g}",
                r["label_mode"],
                f"{r['mean_ece']:.10g}",
                f"{r['std_ece']:.10g}",
                r["n_seeds"],
            ]
        )


def sweep_csv_text(rows):
    buf = io.StringIO()
    sweep_to_csv(rows, buf)
    return buf.getvalue()


def history_to_csv(history, path_or_file):
    """Training-history CSV: epoch, source_loss, target_error, target_nll."""
    history = np.asarray(history)
    rows = [
        (int(e), f"{sl:.10g}", f"{te:.10g}", f"{tn:.10g}")
        for e, sl, te, tn in history
    ]
    if isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__"):
        with open(path_or_file, "w", newline="") as fh:
            _write_history_rows(fh, rows)
    else:
        _write_history_rows(path_or_file, rows)


def _write_history_rows(fh, rows):
    writer = csv.writer(fh)
    writer.writerow(["epoch", "source_loss", "target_error", "target_nll"])
    writer.writerows(rows)
