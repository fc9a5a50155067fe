"""Post-hoc calibration transforms: temperature, vector, and matrix scaling.

Temperature scaling divides logits by a fitted scalar T and never
changes the predicted class. Vector and matrix scaling fit per-class
affine maps and may trade accuracy for likelihood; both strictly
contain the temperature family, so their fitted NLL can only be lower.
"""

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InvalidInputError, LabelsRequiredError
from .metrics import PredictionBatch
from .numerics import PROB_EPS, minimize_scalar, softmax

# Search bounds for the temperature. Wide enough to contain every
# plausible optimum while keeping softmax(z/T) numerically sane;
# boundary returns are meaningful (degenerate all-correct/all-wrong fits).
T_MIN = 0.05
T_MAX = 20.0

TEMPERATURE_TOL = 1e-4

GD_MAX_ITER = 2000
GD_GRAD_TOL = 1e-6
_ARMIJO_C = 1e-4

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Calibrator:
    """A fitted post-hoc transform applied to logits.

    kind is one of "identity", "temperature", "vector", "matrix".
    ``converged`` is a warning flag for the gradient-descent fits; it
    never blocks applying the calibrator.
    """

    kind: str
    temperature: float | None = None
    scale: np.ndarray | None = None
    bias: np.ndarray | None = None
    weight: np.ndarray | None = None
    converged: bool = True

    def __post_init__(self):
        if self.kind not in ("identity", "temperature", "vector", "matrix"):
            raise InvalidInputError(f"unknown calibrator kind {self.kind!r}")
        if self.kind == "temperature":
            if self.temperature is None or not (T_MIN <= self.temperature <= T_MAX):
                raise InvalidInputError(
                    f"temperature must lie in [{T_MIN}, {T_MAX}], got {self.temperature}"
                )

    def apply(self, batch):
        return apply(self, batch)


def identity():
    return Calibrator(kind="identity")


def apply(calibrator, batch):
    """Transform a batch's logits; labels are carried through unchanged."""
    z = batch.logits
    if calibrator.kind == "identity":
        out = z
    elif calibrator.kind == "temperature":
        out = z / calibrator.temperature
    elif calibrator.kind == "vector":
        scale = np.asarray(calibrator.scale, dtype=np.float64)
        bias = np.asarray(calibrator.bias, dtype=np.float64)
        if scale.shape != (batch.num_classes,) or bias.shape != (batch.num_classes,):
            raise InvalidInputError("vector calibrator dimensions do not match batch")
        out = z * scale + bias
    elif calibrator.kind == "matrix":
        weight = np.asarray(calibrator.weight, dtype=np.float64)
        bias = np.asarray(calibrator.bias, dtype=np.float64)
        c = batch.num_classes
        if weight.shape != (c, c) or bias.shape != (c,):
            raise InvalidInputError("matrix calibrator dimensions do not match batch")
        out = z @ weight.T + bias
    else:  # pragma: no cover - kind validated at construction
        raise InvalidInputError(f"unknown calibrator kind {calibrator.kind!r}")
    return PredictionBatch(logits=out, labels=batch.labels)


def _nll_against(probs, labels, soft_labels):
    logp = np.log(np.maximum(probs, PROB_EPS))
    if soft_labels is not None:
        return float(np.mean(-np.sum(soft_labels * logp, axis=1)))
    return float(np.mean(-logp[np.arange(len(labels)), labels]))


def temperature_objective(batch, soft_labels=None):
    """Mean NLL of softmax(z/T) against the batch labels, as a function of T."""
    z = batch.logits
    if soft_labels is None and not batch.has_labels:
        raise LabelsRequiredError("temperature fitting requires hard or soft labels")
    if soft_labels is not None:
        soft_labels = np.asarray(soft_labels, dtype=np.float64)
        if soft_labels.shape != z.shape:
            raise InvalidInputError("soft labels must be an (n, C) matrix matching the logits")

    def objective(t):
        return _nll_against(softmax(z / t), batch.labels, soft_labels)

    return objective


def fit_temperature(batch, soft_labels=None, tol=TEMPERATURE_TOL):
    """Fit the temperature minimizing mean NLL over [T_MIN, T_MAX].

    ``soft_labels`` (an (n, C) matrix) overrides the batch's hard labels
    and turns the objective into cross-entropy against soft targets.
    """
    objective = temperature_objective(batch, soft_labels)
    t = minimize_scalar(objective, T_MIN, T_MAX, tol=tol)
    return Calibrator(kind="temperature", temperature=float(t))


def fit_oracle(batch):
    """Temperature scaling against true labels: the upper-bound reference.

    Identical optimization to :func:`fit_temperature`; kept as a named
    entry point because results tables report it as a separate row.
    """
    if not batch.has_labels:
        raise LabelsRequiredError("oracle fitting requires true labels")
    return fit_temperature(batch)


class NllDecomposition(NamedTuple):
    total: float
    correct_term: float
    wrong_term: float
    n_correct: int
    n_wrong: int


def nll_decomposition(batch, temperature):
    """Split mean NLL at a temperature into correct- and wrong-prediction terms.

    The two splits pull the temperature in opposite directions: raising T
    flattens confidences, which hurts correct predictions and helps wrong
    ones. Satisfies total == (n_c/n) * correct + (n_w/n) * wrong.
    """
    if not batch.has_labels:
        raise LabelsRequiredError("nll decomposition requires labels")
    probs = softmax(batch.logits / temperature)
    per_sample = -np.log(np.maximum(probs[np.arange(batch.n), batch.labels], PROB_EPS))
    correct = batch.correct()
    n_c = int(np.sum(correct))
    n_w = batch.n - n_c
    correct_term = float(np.mean(per_sample[correct])) if n_c else 0.0
    wrong_term = float(np.mean(per_sample[~correct])) if n_w else 0.0
    total = float(np.mean(per_sample))
    recomposed = (n_c * correct_term + n_w * wrong_term) / batch.n
    if abs(total - recomposed) > 1e-9:  # pragma: no cover - float identity
        raise InvalidInputError("decomposition identity violated beyond tolerance")
    return NllDecomposition(total, correct_term, wrong_term, n_c, n_w)


def _affine_nll_and_grads(params_w, params_b, z, labels, mode):
    n, c = z.shape
    if mode == "vector":
        scaled = z * params_w + params_b
    else:
        scaled = z @ params_w.T + params_b
    p = softmax(scaled)
    nll = _nll_against(p, labels, None)
    resid = p.copy()
    resid[np.arange(n), labels] -= 1.0
    if mode == "vector":
        grad_w = np.mean(resid * z, axis=0)
    else:
        grad_w = resid.T @ z / n
    grad_b = np.mean(resid, axis=0)
    return nll, grad_w, grad_b


def _fit_affine(batch, mode, init_w, init_b):
    # Full-batch gradient descent with Armijo backtracking. The objective
    # is convex in the parameters, so monotone descent from the warm
    # start preserves the family nesting: the fitted NLL never exceeds
    # the simpler family's optimum it starts from.
    z = batch.logits
    labels = batch.labels
    w, b = init_w, init_b

    nll, grad_w, grad_b = _affine_nll_and_grads(w, b, z, labels, mode)
    converged = False
    for _ in range(GD_MAX_ITER):
        gsq = float(np.sum(grad_w**2) + np.sum(grad_b**2))
        if np.sqrt(gsq) < GD_GRAD_TOL:
            converged = True
            break
        step = 1.0
        while step > 1e-18:
            cand_w = w - step * grad_w
            cand_b = b - step * grad_b
            cand_nll, cand_gw, cand_gb = _affine_nll_and_grads(cand_w, cand_b, z, labels, mode)
            if cand_nll <= nll - _ARMIJO_C * step * gsq:
                break
            step *= 0.5
        else:
            break
        w, b, nll, grad_w, grad_b = cand_w, cand_b, cand_nll, cand_gw, cand_gb

    if mode == "vector":
        return Calibrator(kind="vector", scale=w, bias=b, converged=converged)
    return Calibrator(kind="matrix", weight=w, bias=b, converged=converged)


def fit_vector(batch):
    """Per-class scale and bias fitted by full-batch gradient descent.

    Seeded from the fitted temperature (scale = 1/T, zero bias), so the
    result is never worse than temperature scaling on the fitting set.
    """
    if not batch.has_labels:
        raise LabelsRequiredError("vector scaling requires labels")
    t = fit_temperature(batch).temperature
    c = batch.num_classes
    return _fit_affine(batch, "vector", np.full(c, 1.0 / t), np.zeros(c))


def fit_matrix(batch):
    """Full affine map on logits fitted by full-batch gradient descent.

    Seeded from the fitted vector scaler (its diagonal embedding), so the
    result is never worse than vector scaling on the fitting set.
    """
    if not batch.has_labels:
        raise LabelsRequiredError("matrix scaling requires labels")
    seed = fit_vector(batch)
    return _fit_affine(batch, "matrix", np.diag(seed.scale), seed.bias.copy())


def calibrator_to_dict(calibrator):
    doc = {"schema_version": SCHEMA_VERSION, "kind": calibrator.kind, "converged": calibrator.converged}
    if calibrator.temperature is not None:
        doc["temperature"] = calibrator.temperature
    if calibrator.scale is not None:
        doc["scale"] = np.asarray(calibrator.scale).tolist()
    if calibrator.bias is not None:
        doc["bias"] = np.asarray(calibrator.bias).tolist()
    if calibrator.weight is not None:
        doc["weight"] = np.asarray(calibrator.weight).tolist()
    return doc


def calibrator_from_dict(doc):
    kind = doc["kind"]
    return Calibrator(
        kind=kind,
        temperature=doc.get("temperature"),
        scale=np.asarray(doc["scale"]) if "scale" in doc else None,
        bias=np.asarray(doc["bias"]) if "bias" in doc else None,
        weight=np.asarray(doc["weight"]) if "weight" in doc else None,
        converged=doc.get("converged", True),
    )


def save_calibrator(calibrator, path):
    with open(path, "w") as fh:
        json.dump(calibrator_to_dict(calibrator), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_calibrator(path):
    with open(path) as fh:
        return calibrator_from_dict(json.load(fh))
