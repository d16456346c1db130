"""The perceptual measure: a linear model over 16 standardized feature
differences plus the objective F-measure, trained with elastic-net
coordinate descent, pruned, and scored by leave-one-out L1 error.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from .features import (
    FEATURE_NAMES,
    FeatureVector,
    StandardizationParams,
    extract_features,
    standardize,
)
from .matching import ToleranceConfig, obj_measure
from .smf import Performance

MEASURE_INPUT_NAMES = tuple(FEATURE_NAMES) + ("obj",)
MODEL_FORMAT_VERSION = 1

DEFAULT_LAMBDA_GRID = (0.001, 0.01, 0.1, 1.0)
DEFAULT_ALPHA_GRID = (0.1, 0.5, 0.9)


@dataclass(frozen=True)
class TrainingConfig:
    lam: float = 0.01  # regularization strength (the elastic-net lambda)
    alpha: float = 0.5  # L1 ratio in [0, 1]
    tol: float = 1e-6
    max_iter: int = 10_000
    prune_threshold: float = 0.1

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if not 0 <= self.alpha <= 1:
            raise ValueError("alpha must be in [0, 1]")

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "alpha": self.alpha,
            "tol": self.tol,
            "max_iter": self.max_iter,
            "prune_threshold": self.prune_threshold,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainingConfig":
        return cls(
            lam=doc["lambda"],
            alpha=doc["alpha"],
            tol=doc.get("tol", 1e-6),
            max_iter=doc.get("max_iter", 10_000),
            prune_threshold=doc.get("prune_threshold", 0.1),
        )


@dataclass(frozen=True)
class MeasureInput:
    """Standardized feature differences plus the objective F-measure."""

    diffs: np.ndarray  # 16 floats
    obj: float

    def __post_init__(self):
        arr = np.asarray(self.diffs, dtype=float)
        if arr.shape != (len(FEATURE_NAMES),):
            raise ValueError(f"expected {len(FEATURE_NAMES)} diffs")
        if not 0 <= self.obj <= 1:
            raise ValueError("obj must be in [0, 1]")
        object.__setattr__(self, "diffs", arr)

    def vector(self) -> np.ndarray:
        return np.concatenate([self.diffs, [self.obj]])


@dataclass(frozen=True)
class PerceptualModel:
    weights: np.ndarray
    intercept: float
    active_mask: np.ndarray  # bool per weight; weights are 0 where inactive
    standardization: StandardizationParams | None = None
    training_config: TrainingConfig = TrainingConfig()
    converged: bool = True

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        mask = np.asarray(self.active_mask, dtype=bool)
        if w.shape != mask.shape:
            raise ValueError("weights and active_mask must have matching shapes")
        if np.any(w[~mask] != 0):
            raise ValueError("inactive weights must be exactly 0")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "active_mask", mask)


def make_input(
    ref: Performance,
    est: Performance,
    params: StandardizationParams,
    tol: ToleranceConfig | None = None,
) -> MeasureInput:
    """Standardized feature difference (ref minus est) with OBJ appended."""
    f_ref = standardize(extract_features(ref), params)
    f_est = standardize(extract_features(est), params)
    score = obj_measure(ref, est, tol)
    return MeasureInput(f_ref.values - f_est.values, score.f_measure)


def predict(model: PerceptualModel, x) -> float:
    """Linear prediction; the output is intentionally not clamped."""
    vec = x.vector() if isinstance(x, MeasureInput) else np.asarray(x, dtype=float)
    return float(model.weights @ vec + model.intercept)


def _elasticnet_objective(Xc, yc, w, lam, alpha) -> float:
    n = Xc.shape[0]
    residual = yc - Xc @ w
    return (
        0.5 * residual @ residual / n
        + lam * alpha * np.abs(w).sum()
        + 0.5 * lam * (1 - alpha) * (w @ w)
    )


def _soft_threshold(value: float, threshold: float) -> float:
    if value > threshold:
        return value - threshold
    if value < -threshold:
        return value + threshold
    return 0.0


def _coordinate_descent(X, y, lam, alpha, tol, max_iter):
    """Cyclic coordinate descent on centered data; intercept unpenalized.

    Minimizes (1/2n)||y - Xw - b||^2 + lam*alpha*||w||_1
    + (lam*(1-alpha)/2)*||w||^2. Returns (w, b, converged).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite values in training data")
    n, d = X.shape
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    Xc = X - x_mean
    yc = y - y_mean

    col_norm = (Xc**2).sum(axis=0) / n
    denom = col_norm + lam * (1 - alpha)
    l1 = lam * alpha

    w = np.zeros(d)
    residual = yc.copy()  # yc - Xc @ w, maintained incrementally
    converged = False
    if __debug__:
        prev_obj = _elasticnet_objective(Xc, yc, w, lam, alpha)
    for _ in range(max_iter):
        max_delta = 0.0
        for j in range(d):
            if denom[j] == 0.0:
                continue  # constant column: no signal, leave at 0
            old = w[j]
            rho = (Xc[:, j] @ residual) / n + col_norm[j] * old
            new = _soft_threshold(rho, l1) / denom[j]
            if new != old:
                residual += Xc[:, j] * (old - new)
                w[j] = new
                max_delta = max(max_delta, abs(new - old))
        if __debug__:
            obj = _elasticnet_objective(Xc, yc, w, lam, alpha)
            assert obj <= prev_obj + 1e-10 * (1 + abs(prev_obj)), (
                "elastic-net objective increased during a sweep"
            )
            prev_obj = obj
        if max_delta < tol:
            converged = True
            break
    b = y_mean - x_mean @ w
    return w, float(b), converged


def fit_elasticnet(X, y, cfg: TrainingConfig | None = None, standardization=None) -> PerceptualModel:
    """Fit a linear model by elastic-net coordinate descent.

    A model that hits max_iter without meeting the tolerance is still
    returned, with its converged flag set to False.
    """
    cfg = cfg or TrainingConfig()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need at least 2 training rows")
    w, b, converged = _coordinate_descent(X, y, cfg.lam, cfg.alpha, cfg.tol, cfg.max_iter)
    return PerceptualModel(
        weights=w,
        intercept=b,
        active_mask=np.ones(X.shape[1], dtype=bool),
        standardization=standardization,
        training_config=cfg,
        converged=converged,
    )


def prune_refit(model: PerceptualModel, X, y, threshold: float | None = None) -> PerceptualModel:
    """Drop features with |weight| below the threshold and refit the rest."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    cfg = model.training_config
    if threshold is None:
        threshold = cfg.prune_threshold
    keep = model.active_mask & (np.abs(model.weights) >= threshold)
    weights = np.zeros_like(model.weights)
    if not keep.any():
        return replace(
            model,
            weights=weights,
            intercept=float(y.mean()),
            active_mask=keep,
            converged=True,
        )
    w, b, converged = _coordinate_descent(
        X[:, keep], y, cfg.lam, cfg.alpha, cfg.tol, cfg.max_iter
    )
    weights[keep] = w
    return replace(model, weights=weights, intercept=b, active_mask=keep, converged=converged)


def loo_evaluate(X, y, cfg: TrainingConfig | None = None) -> float:
    """Average L1 error of fit+prune models in a leave-one-out loop."""
    cfg = cfg or TrainingConfig()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = X.shape[0]
    if n < 3:
        raise ValueError("leave-one-out needs at least 3 rows")
    errors = np.empty(n)
    for i in range(n):
        mask = np.arange(n) != i
        model = fit_elasticnet(X[mask], y[mask], cfg)
        model = prune_refit(model, X[mask], y[mask])
        errors[i] = abs(y[i] - predict(model, X[i]))
    return float(errors.mean())


def grid_train(
    X,
    y,
    lambdas=DEFAULT_LAMBDA_GRID,
    alphas=DEFAULT_ALPHA_GRID,
    tol: float = 1e-6,
    max_iter: int = 10_000,
    prune_threshold: float = 0.1,
    standardization: StandardizationParams | None = None,
):
    """Select (lambda, alpha) by leave-one-out L1 and fit the final model.

    Returns (model, grid) where grid is a list of (lambda, alpha, loo_l1)
    in evaluation order; ties keep the earliest grid cell.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    grid = []
    best = None
    for lam in lambdas:
        for alpha in alphas:
            cfg = TrainingConfig(lam, alpha, tol, max_iter, prune_threshold)
            err = loo_evaluate(X, y, cfg)
            grid.append((lam, alpha, err))
            if best is None or err < best[1]:
                best = (cfg, err)
    cfg = best[0]
    model = fit_elasticnet(X, y, cfg, standardization)
    model = prune_refit(model, X, y)
    return model, grid


# ---------------------------------------------------------------------------
# Model file and training data interchange
# ---------------------------------------------------------------------------


def model_to_dict(model: PerceptualModel) -> dict:
    if len(model.weights) != len(MEASURE_INPUT_NAMES):
        raise ValueError(
            f"model file format requires {len(MEASURE_INPUT_NAMES)} weights"
        )
    std = model.standardization or StandardizationParams.identity(len(FEATURE_NAMES))
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "weights": [float(w) for w in model.weights],
        "intercept": float(model.intercept),
        "active_mask": [bool(m) for m in model.active_mask],
        "standardization": {
            "mean": [float(x) for x in std.mean],
            "std": [float(x) for x in std.std],
        },
        "training_config": model.training_config.to_dict(),
        "feature_names": list(MEASURE_INPUT_NAMES),
        "tool_version": __version__,
    }


def model_from_dict(doc: dict) -> PerceptualModel:
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format_version {doc.get('format_version')}")
    names = doc.get("feature_names")
    if names != list(MEASURE_INPUT_NAMES):
        raise ValueError("model feature_names do not match this tool's input layout")
    std = doc["standardization"]
    return PerceptualModel(
        weights=np.array(doc["weights"], dtype=float),
        intercept=float(doc["intercept"]),
        active_mask=np.array(doc["active_mask"], dtype=bool),
        standardization=StandardizationParams(
            np.array(std["mean"], dtype=float), np.array(std["std"], dtype=float)
        ),
        training_config=TrainingConfig.from_dict(doc["training_config"]),
    )


def save_model(model: PerceptualModel, path):
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh, indent=2)
        fh.write("\n")


def load_model(path) -> PerceptualModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))


def load_training_csv(path):
    """Read training rows: the 17 measure-input columns plus `rating`.

    Returns (X, y).
    """
    expected = list(MEASURE_INPUT_NAMES) + ["rating"]
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in expected if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"{path}: missing columns: {', '.join(missing)}")
        X, y = [], []
        for line_no, row in enumerate(reader, start=2):
            try:
                X.append([float(row[c]) for c in MEASURE_INPUT_NAMES])
                y.append(float(row["rating"]))
            except (TypeError, ValueError):
                raise ValueError(f"{path}: row {line_no}: non-numeric value") from None
    if not X:
        raise ValueError(f"{path}: no data rows")
    return np.asarray(X), np.asarray(y)
