"""Point-estimate regressors behind one contract: least squares and
stage-wise gradient-boosted regression trees, plus residual extraction
and point-forecast metrics.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .data import INTERVALS_PER_DAY, FeatureMatrix
from .errors import ConfigError, DataError

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class RegressorSpec:
    kind: str  # "least_squares" or "boosted_trees"
    fit_intercept: bool = True
    tree_count: int = 100
    max_depth: int = 3
    learning_rate: float = 0.1
    min_samples_leaf: int = 5

    def __post_init__(self):
        if self.kind not in ("least_squares", "boosted_trees"):
            raise ConfigError(f"unknown regressor kind {self.kind!r}")
        if self.tree_count < 0:
            raise ConfigError("tree_count must be >= 0")
        if self.max_depth < 0:
            raise ConfigError("max_depth must be >= 0")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ConfigError("learning_rate must be in (0, 1]")
        if self.min_samples_leaf < 1:
            raise ConfigError("min_samples_leaf must be >= 1")


@dataclass(frozen=True)
class FittedModel:
    """Immutable fitted regressor; predict is deterministic."""

    spec: RegressorSpec
    n_features: int
    # least squares
    coef: np.ndarray | None = None
    intercept: float = 0.0
    # boosted trees
    base_value: float = 0.0
    trees: tuple = field(default=())


def fit(spec: RegressorSpec, X: np.ndarray, y: np.ndarray) -> FittedModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or len(X) != len(y):
        raise DataError("X must be 2-D and aligned with y")
    if len(y) < 2:
        raise DataError("need at least 2 rows to fit")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise DataError("non-finite feature or target")
    if spec.kind == "least_squares":
        coef, intercept = _fit_least_squares(X, y, spec.fit_intercept)
        return FittedModel(spec=spec, n_features=X.shape[1], coef=coef, intercept=intercept)
    base, trees = _fit_boosted_trees(X, y, spec)
    return FittedModel(spec=spec, n_features=X.shape[1], base_value=base, trees=trees)


def predict(model: FittedModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DataError(
            f"feature arity {X.shape[1] if X.ndim == 2 else '?'} != {model.n_features}"
        )
    if not np.isfinite(X).all():
        raise DataError("non-finite feature")
    if model.spec.kind == "least_squares":
        return X @ model.coef + model.intercept
    out = np.full(len(X), model.base_value)
    lr = model.spec.learning_rate
    for tree in model.trees:
        out += lr * _tree_predict(tree, X)
    return out


def residual_matrix(model: FittedModel, rows: FeatureMatrix) -> dict[int, np.ndarray]:
    """Per-day residual vectors y - yhat, keyed by day label."""
    yhat = predict(model, rows.X)
    z = rows.y - yhat
    out = {}
    for j in np.unique(rows.day_index):
        mask = rows.day_index == j
        if mask.sum() != INTERVALS_PER_DAY:
            raise DataError(f"day {j} has {mask.sum()} rows, expected {INTERVALS_PER_DAY}")
        order = np.argsort(rows.interval[mask], kind="stable")
        out[int(j)] = z[mask][order]
    return out


# ---------------------------------------------------------------------------
# Least squares

def _fit_least_squares(X, y, fit_intercept):
    design = np.column_stack([X, np.ones(len(X))]) if fit_intercept else X
    p = design.shape[1]
    beta, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < p:
        # collinear dummies happen on short windows; the SVD solve already
        # returns the minimum-norm solution, so just flag it
        warnings.warn("rank-deficient design; using the minimum-norm solution")
    if fit_intercept:
        return beta[:-1], float(beta[-1])
    return beta, 0.0


# ---------------------------------------------------------------------------
# Boosted regression trees (squared loss, exact greedy splits)

def _fit_boosted_trees(X, y, spec):
    base = float(y.mean())
    pred = np.full(len(y), base)
    trees = []
    for _ in range(spec.tree_count):
        tree = _grow_tree(X, y - pred, spec.max_depth, spec.min_samples_leaf)
        pred += spec.learning_rate * _tree_predict(tree, X)
        trees.append(tree)
    return base, tuple(trees)


def _grow_tree(X, r, max_depth, min_leaf):
    """Nodes are dicts; internal: feature/threshold/left/right, leaf: value."""

    def build(idx, depth):
        if depth >= max_depth or len(idx) < 2 * min_leaf:
            return {"value": float(r[idx].mean())}
        split = _best_split(X, r, idx, min_leaf)
        if split is None:
            return {"value": float(r[idx].mean())}
        feat, thr = split
        mask = X[idx, feat] <= thr
        return {
            "feature": feat,
            "threshold": thr,
            "left": build(idx[mask], depth + 1),
            "right": build(idx[~mask], depth + 1),
        }

    return build(np.arange(len(r)), 0)


def _best_split(X, r, idx, min_leaf):
    """Exact greedy split minimizing children SSE.

    Ties break toward the smallest feature index, then smallest threshold
    (argmin on the ascending-threshold scan returns the first minimum).
    """
    n = len(idx)
    best = None  # (sse, feature, threshold)
    positions = np.arange(1, n)
    for feat in range(X.shape[1]):
        xs = X[idx, feat]
        order = np.argsort(xs, kind="stable")
        xs_sorted = xs[order]
        rs = r[idx][order]
        valid = xs_sorted[1:] > xs_sorted[:-1]
        valid &= (positions >= min_leaf) & (n - positions >= min_leaf)
        if not valid.any():
            continue
        csum = np.cumsum(rs)
        left_sum = csum[:-1]
        right_sum = csum[-1] - left_sum
        sse = -(left_sum**2 / positions) - (right_sum**2 / (n - positions))
        sse = np.where(valid, sse, np.inf)
        pos = int(np.argmin(sse))
        cand = float(sse[pos])
        parent = -(csum[-1] ** 2) / n
        if cand >= parent - 1e-12:
            continue
        if best is None or cand < best[0]:
            thr = float((xs_sorted[pos] + xs_sorted[pos + 1]) / 2.0)
            best = (cand, feat, thr)
    if best is None:
        return None
    return best[1], best[2]


def _tree_predict(tree, X):
    out = np.empty(len(X))

    def walk(node, idx):
        if "value" in node:
            out[idx] = node["value"]
            return
        mask = X[idx, node["feature"]] <= node["threshold"]
        walk(node["left"], idx[mask])
        walk(node["right"], idx[~mask])

    walk(tree, np.arange(len(X)))
    return out


# ---------------------------------------------------------------------------
# Save / load

def model_to_dict(model: FittedModel) -> dict:
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": model.spec.kind,
        "n_features": model.n_features,
        "spec": {
            "fit_intercept": model.spec.fit_intercept,
            "tree_count": model.spec.tree_count,
            "max_depth": model.spec.max_depth,
            "learning_rate": model.spec.learning_rate,
            "min_samples_leaf": model.spec.min_samples_leaf,
        },
    }
    if model.spec.kind == "least_squares":
        doc["coef"] = model.coef.tolist()
        doc["intercept"] = model.intercept
    else:
        doc["base_value"] = model.base_value
        doc["trees"] = list(model.trees)
    return doc


def model_from_dict(doc: dict) -> FittedModel:
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise DataError(f"unsupported model format {doc.get('format_version')!r}")
    spec = RegressorSpec(kind=doc["kind"], **doc["spec"])
    if spec.kind == "least_squares":
        return FittedModel(
            spec=spec,
            n_features=doc["n_features"],
            coef=np.asarray(doc["coef"], dtype=float),
            intercept=float(doc["intercept"]),
        )
    return FittedModel(
        spec=spec,
        n_features=doc["n_features"],
        base_value=float(doc["base_value"]),
        trees=tuple(doc["trees"]),
    )


def save_model(model: FittedModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh)


def load_model(path) -> FittedModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# Point metrics

@dataclass(frozen=True)
class PointMetrics:
    mae: float
    mse: float
    rmse: float
    mape: float  # percent, zero-target rows skipped
    r2: float
    rmsle: float
    mape_skipped: int


def point_metrics(y, yhat) -> PointMetrics:
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if len(y) != len(yhat) or len(y) < 1:
        raise DataError("y and yhat must be equally sized and non-empty")
    err = y - yhat
    mae = float(np.abs(err).mean())
    mse = float((err**2).mean())
    sst = float(((y - y.mean()) ** 2).sum())
    if sst == 0.0:
        raise DataError("zero target variance; R2 undefined")
    nonzero = y != 0
    skipped = int((~nonzero).sum())
    if nonzero.any():
        mape = float(100.0 * np.abs(err[nonzero] / y[nonzero]).mean())
    else:
        mape = float("nan")
    if (y <= -1).any() or (yhat <= -1).any():
        raise DataError("RMSLE requires values > -1")
    rmsle = float(np.sqrt(((np.log1p(y) - np.log1p(yhat)) ** 2).mean()))
    return PointMetrics(
        mae=mae,
        mse=mse,
        rmse=float(np.sqrt(mse)),
        mape=mape,
        r2=float(1.0 - (err**2).sum() / sst),
        rmsle=rmsle,
        mape_skipped=skipped,
    )
