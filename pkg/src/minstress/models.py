"""Binary classifiers trained from scratch on dense feature matrices.

Four model kinds share one interface: ``predict_proba`` returns P(y=1).
Logistic regression is the reference model; Gaussian naive Bayes, a CART
decision tree, and a constant-probability dummy serve as comparators.
All training is deterministic given the config seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

__all__ = [
    "Dataset",
    "TrainConfig",
    "LogisticModel",
    "NaiveBayesModel",
    "DecisionTreeModel",
    "DummyModel",
    "train_logistic",
    "train_naive_bayes",
    "train_tree",
    "train_dummy",
    "train_model",
    "coefficients",
    "logistic_loss",
    "logistic_gradient",
    "model_to_dict",
    "model_from_dict",
    "save_model",
    "load_model",
    "MODEL_KINDS",
]

MODEL_KINDS = ("dummy", "naive_bayes", "decision_tree", "logistic")

_FORMAT = "minstress-model"
_VERSION = 1


@dataclass(frozen=True)
class Dataset:
    """Feature matrix X (n, p), binary labels y in {0, 1}, column names."""

    x: np.ndarray
    y: np.ndarray
    schema: tuple[str, ...]

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.int64)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if x.ndim != 2:
            raise ValueError(f"x must be 2-d, got shape {x.shape}")
        if y.shape != (x.shape[0],):
            raise ValueError("y length does not match x rows")
        if x.shape[1] != len(self.schema):
            raise ValueError("schema length does not match x columns")
        if not np.all(np.isfinite(x)):
            raise ValueError("x contains non-finite values")
        if y.size and not np.all((y == 0) | (y == 1)):
            raise ValueError("y must be 0/1")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def subset(self, rows: np.ndarray) -> "Dataset":
        return Dataset(self.x[rows], self.y[rows], self.schema)

    def select_columns(self, keep: Sequence[int]) -> "Dataset":
        keep = list(keep)
        return Dataset(self.x[:, keep], self.y, tuple(self.schema[i] for i in keep))


@dataclass(frozen=True)
class TrainConfig:
    """Shared training knobs; model kinds ignore fields they do not use.

    learning_rate None picks a safe step from the data spectrum, so the
    default converges on both toy fixtures and wide text matrices.
    """

    seed: int = 0
    learning_rate: float | None = None
    max_iters: int = 2000
    tol: float = 1e-6
    lambda_: float = 1e-2
    lambda_grid: tuple[float, ...] = ()
    tree_max_depth: int | None = 10
    tree_min_leaf: int = 5

    def __post_init__(self):
        if self.learning_rate is not None and self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.lambda_ < 0 or any(l < 0 for l in self.lambda_grid):
            raise ValueError("regularization strength must be >= 0")
        if self.tree_min_leaf < 1:
            raise ValueError("tree_min_leaf must be >= 1")


def _check_trainable(data: Dataset) -> None:
    if data.n == 0:
        raise ValueError("empty dataset")
    if np.all(data.y == data.y[0]):
        raise ValueError("degenerate labels: training data contains a single class")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass(frozen=True)
class LogisticModel:
    """L2-regularized logistic regression on internally standardized inputs."""

    weights: np.ndarray
    bias: float
    feature_means: np.ndarray
    feature_scales: np.ndarray
    lambda_: float
    schema: tuple[str, ...]
    n_iters: int = 0
    converged: bool = False

    kind = "logistic"

    def decision_function(self, x: np.ndarray) -> np.ndarray:
        x = _as_matrix(x, len(self.schema))
        xs = (x - self.feature_means) / self.feature_scales
        return xs @ self.weights + self.bias

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        squeeze = np.asarray(x).ndim == 1
        probs = _sigmoid(self.decision_function(x))
        return float(probs[0]) if squeeze else probs


def _as_matrix(x: np.ndarray, p: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != p:
        raise ValueError(f"expected {p} features, got shape {x.shape}")
    return x


def _standardize(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    means = x.mean(axis=0)
    sds = x.std(axis=0)
    scales = np.where(sds > 0, sds, 1.0)
    return (x - means) / scales, means, scales


def logistic_loss(w: np.ndarray, b: float, x: np.ndarray, y: np.ndarray, lam: float) -> float:
    """Mean log loss plus (lam/2)*||w||^2; the bias is unpenalized."""
    z = x @ w + b
    data = np.mean(np.logaddexp(0.0, z) - y * z)
    return float(data + 0.5 * lam * np.dot(w, w))


def logistic_gradient(
    w: np.ndarray, b: float, x: np.ndarray, y: np.ndarray, lam: float
) -> tuple[np.ndarray, float]:
    r = _sigmoid(x @ w + b) - y
    gw = x.T @ r / x.shape[0] + lam * w
    gb = float(r.mean())
    return gw, gb


def _auto_step(x: np.ndarray, lam: float) -> float:
    # Lipschitz constant of the gradient is eigmax(X^T X)/(4n) + lam;
    # estimate eigmax by power iteration without forming X^T X.
    n, p = x.shape
    v = np.ones(p) / np.sqrt(p)
    eig = 0.0
    for _ in range(30):
        av = x.T @ (x @ v) / n
        norm = float(np.linalg.norm(av))
        if norm == 0.0:
            break
        eig = norm
        v = av / norm
    lipschitz = 1.2 * eig / 4.0 + lam
    return 1.0 / max(lipschitz, 1e-3)


def _fit_logistic(x: np.ndarray, y: np.ndarray, lam: float, config: TrainConfig):
    xs, means, scales = _standardize(x)
    step = config.learning_rate if config.learning_rate is not None else _auto_step(xs, lam)
    w = np.zeros(x.shape[1])
    # at w = 0 the optimal unpenalized intercept is the prevalence logit;
    # starting there keeps the bias correct even when a large lam makes
    # the shared step size too small for the bias to travel anywhere
    prevalence = float(np.mean(y))
    b = math.log(prevalence / (1.0 - prevalence))
    yf = y.astype(np.float64)
    n_iters = 0
    converged = False
    for n_iters in range(1, config.max_iters + 1):
        gw, gb = logistic_gradient(w, b, xs, yf, lam)
        if max(np.max(np.abs(gw), initial=0.0), abs(gb)) < config.tol:
            n_iters -= 1
            converged = True
            break
        w = w - step * gw
        b = b - step * gb
    else:
        gw, gb = logistic_gradient(w, b, xs, yf, lam)
        converged = max(np.max(np.abs(gw), initial=0.0), abs(gb)) < config.tol
    return w, b, means, scales, n_iters, converged


def _inner_split(y: np.ndarray, seed: int, held_out: float = 0.2):
    """Stratified single split for lambda selection; both parts keep both classes."""
    rng = np.random.default_rng(seed)
    train_idx, val_idx = [], []
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        idx = idx[rng.permutation(idx.size)]
        n_val = max(1, int(round(held_out * idx.size)))
        n_val = min(n_val, idx.size - 1)
        val_idx.extend(idx[:n_val])
        train_idx.extend(idx[n_val:])
    return np.sort(np.asarray(train_idx)), np.sort(np.asarray(val_idx))


def train_logistic(data: Dataset, config: TrainConfig = TrainConfig()) -> LogisticModel:
    """Full-batch gradient descent on standardized features.

    With a nonempty ``lambda_grid`` the strength is chosen by held-out
    log loss on a stratified inner split (ties prefer the smaller
    lambda), then the model is refit on all rows.
    """
    _check_trainable(data)
    lam = config.lambda_
    if config.lambda_grid:
        train_idx, val_idx = _inner_split(data.y, config.seed)
        best = None
        for cand in sorted(config.lambda_grid):
            w, b, means, scales, _, _ = _fit_logistic(
                data.x[train_idx], data.y[train_idx], cand, config
            )
            xv = (data.x[val_idx] - means) / scales
            val_loss = logistic_loss(w, b, xv, data.y[val_idx].astype(np.float64), 0.0)
            if best is None or val_loss < best[0] - 1e-12:
                best = (val_loss, cand)
        lam = best[1]
    w, b, means, scales, n_iters, converged = _fit_logistic(data.x, data.y, lam, config)
    return LogisticModel(
        weights=w,
        bias=b,
        feature_means=means,
        feature_scales=scales,
        lambda_=lam,
        schema=data.schema,
        n_iters=n_iters,
        converged=converged,
    )


def coefficients(model: LogisticModel) -> list[tuple[str, float]]:
    """(feature name, weight) pairs, weight descending, ties lexicographic."""
    pairs = list(zip(model.schema, (float(v) for v in model.weights)))
    return sorted(pairs, key=lambda kv: (-kv[1], kv[0]))


@dataclass(frozen=True)
class NaiveBayesModel:
    """Gaussian class-conditional densities with per-feature variance floor."""

    class_priors: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    schema: tuple[str, ...]

    kind = "naive_bayes"

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        squeeze = np.asarray(x).ndim == 1
        x = _as_matrix(x, len(self.schema))
        log_joint = np.empty((x.shape[0], 2))
        for cls in (0, 1):
            diff = x - self.means[cls]
            log_like = -0.5 * np.sum(
                np.log(2.0 * np.pi * self.variances[cls]) + diff**2 / self.variances[cls],
                axis=1,
            )
            log_joint[:, cls] = np.log(self.class_priors[cls]) + log_like
        # normalize in log space to dodge underflow on wide inputs
        shift = log_joint.max(axis=1, keepdims=True)
        probs = np.exp(log_joint - shift)
        probs /= probs.sum(axis=1, keepdims=True)
        out = probs[:, 1]
        return float(out[0]) if squeeze else out


def train_naive_bayes(data: Dataset, config: TrainConfig = TrainConfig()) -> NaiveBayesModel:
    _check_trainable(data)
    priors = np.empty(2)
    means = np.empty((2, data.p))
    variances = np.empty((2, data.p))
    for cls in (0, 1):
        rows = data.x[data.y == cls]
        priors[cls] = rows.shape[0] / data.n
        means[cls] = rows.mean(axis=0)
        variances[cls] = np.maximum(rows.var(axis=0), 1e-9)
    return NaiveBayesModel(
        class_priors=priors, means=means, variances=variances, schema=data.schema
    )


@dataclass(frozen=True)
class TreeNode:
    """Internal node splits ``x[feature] <= threshold`` to the left child."""

    prob: float
    n_samples: int
    feature: int | None = None
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


@dataclass(frozen=True)
class DecisionTreeModel:
    root: TreeNode
    schema: tuple[str, ...]
    max_depth: int | None
    min_leaf: int

    kind = "decision_tree"

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        squeeze = np.asarray(x).ndim == 1
        x = _as_matrix(x, len(self.schema))
        out = np.empty(x.shape[0])
        for i, row in enumerate(x):
            node = self.root
            while not node.is_leaf:
                node = node.left if row[node.feature] <= node.threshold else node.right
            out[i] = node.prob
        return float(out[0]) if squeeze else out

    def depth(self) -> int:
        def walk(node: TreeNode) -> int:
            if node.is_leaf:
                return 0
            return 1 + max(walk(node.left), walk(node.right))

        return walk(self.root)

    def leaf_count(self) -> int:
        def walk(node: TreeNode) -> int:
            if node.is_leaf:
                return 1
            return walk(node.left) + walk(node.right)

        return walk(self.root)


def _gini_split_scores(xs: np.ndarray, cum1: np.ndarray, min_leaf: int):
    """Weighted Gini for every boundary between distinct sorted values.

    Returns (scores, thresholds) or None when no boundary is admissible.
    """
    n = xs.size
    total1 = cum1[-1]
    boundary = np.flatnonzero(xs[1:] > xs[:-1])
    if boundary.size == 0:
        return None
    nl = boundary + 1
    nr = n - nl
    ok = (nl >= min_leaf) & (nr >= min_leaf)
    if not np.any(ok):
        return None
    nl, nr, boundary = nl[ok], nr[ok], boundary[ok]
    l1 = cum1[boundary]
    r1 = total1 - l1
    gini_l = 2.0 * (l1 / nl) * (1.0 - l1 / nl)
    gini_r = 2.0 * (r1 / nr) * (1.0 - r1 / nr)
    scores = (nl * gini_l + nr * gini_r) / n
    thresholds = (xs[boundary] + xs[boundary + 1]) / 2.0
    return scores, thresholds


def _build_tree(
    x: np.ndarray, y: np.ndarray, depth: int, max_depth: int | None, min_leaf: int
) -> TreeNode:
    n = y.size
    n1 = int(y.sum())
    prob = n1 / n
    leaf = TreeNode(prob=prob, n_samples=n)
    if n1 == 0 or n1 == n or n < 2 * min_leaf:
        return leaf
    if max_depth is not None and depth >= max_depth:
        return leaf
    parent_gini = 2.0 * prob * (1.0 - prob)
    best = None
    for j in range(x.shape[1]):
        order = np.argsort(x[:, j], kind="stable")
        xs = x[order, j]
        cum1 = np.cumsum(y[order])
        found = _gini_split_scores(xs, cum1, min_leaf)
        if found is None:
            continue
        scores, thresholds = found
        i = int(np.argmin(scores))
        cand = (float(scores[i]), j, float(thresholds[i]))
        if best is None or cand < best:
            best = cand
    if best is None or best[0] >= parent_gini - 1e-12:
        return leaf
    _, j, thr = best
    mask = x[:, j] <= thr
    left = _build_tree(x[mask], y[mask], depth + 1, max_depth, min_leaf)
    right = _build_tree(x[~mask], y[~mask], depth + 1, max_depth, min_leaf)
    return TreeNode(
        prob=prob, n_samples=n, feature=j, threshold=thr, left=left, right=right
    )


def train_tree(data: Dataset, config: TrainConfig = TrainConfig()) -> DecisionTreeModel:
    """CART with weighted Gini; ties prefer lower feature index, then threshold."""
    _check_trainable(data)
    root = _build_tree(data.x, data.y, 0, config.tree_max_depth, config.tree_min_leaf)
    return DecisionTreeModel(
        root=root,
        schema=data.schema,
        max_depth=config.tree_max_depth,
        min_leaf=config.tree_min_leaf,
    )


@dataclass(frozen=True)
class DummyModel:
    """Predicts the training prevalence of class 1 for every input."""

    prob: float
    schema: tuple[str, ...]

    kind = "dummy"

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        squeeze = np.asarray(x).ndim == 1
        x = _as_matrix(x, len(self.schema))
        out = np.full(x.shape[0], self.prob)
        return float(out[0]) if squeeze else out


def train_dummy(data: Dataset, config: TrainConfig = TrainConfig()) -> DummyModel:
    if data.n == 0:
        raise ValueError("empty dataset")
    return DummyModel(prob=float(data.y.mean()), schema=data.schema)


_TRAINERS = {
    "dummy": train_dummy,
    "naive_bayes": train_naive_bayes,
    "decision_tree": train_tree,
    "logistic": train_logistic,
}


def train_model(kind: str, data: Dataset, config: TrainConfig = TrainConfig()):
    if kind not in _TRAINERS:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
    return _TRAINERS[kind](data, config)


def _node_to_dict(node: TreeNode) -> dict:
    d = {"prob": node.prob, "n_samples": node.n_samples}
    if not node.is_leaf:
        d.update(
            feature=node.feature,
            threshold=node.threshold,
            left=_node_to_dict(node.left),
            right=_node_to_dict(node.right),
        )
    return d


def _node_from_dict(d: dict) -> TreeNode:
    if "feature" in d:
        return TreeNode(
            prob=d["prob"],
            n_samples=d["n_samples"],
            feature=d["feature"],
            threshold=d["threshold"],
            left=_node_from_dict(d["left"]),
            right=_node_from_dict(d["right"]),
        )
    return TreeNode(prob=d["prob"], n_samples=d["n_samples"])


def model_to_dict(model) -> dict:
    base = {"format": _FORMAT, "version": _VERSION, "kind": model.kind, "schema": list(model.schema)}
    if model.kind == "dummy":
        base["params"] = {"prob": model.prob}
    elif model.kind == "naive_bayes":
        base["params"] = {
            "class_priors": model.class_priors.tolist(),
            "means": model.means.tolist(),
            "variances": model.variances.tolist(),
        }
    elif model.kind == "logistic":
        base["params"] = {
            "weights": model.weights.tolist(),
            "bias": model.bias,
            "feature_means": model.feature_means.tolist(),
            "feature_scales": model.feature_scales.tolist(),
            "lambda": model.lambda_,
            "n_iters": model.n_iters,
            "converged": model.converged,
        }
    elif model.kind == "decision_tree":
        base["params"] = {
            "root": _node_to_dict(model.root),
            "max_depth": model.max_depth,
            "min_leaf": model.min_leaf,
        }
    else:
        raise ValueError(f"unknown model kind {model.kind!r}")
    return base


def model_from_dict(d: dict):
    if d.get("format") != _FORMAT:
        raise ValueError("not a model file")
    if d.get("version") != _VERSION:
        raise ValueError(f"unsupported model version {d.get('version')!r}")
    kind = d.get("kind")
    schema = tuple(d["schema"])
    params = d["params"]
    if kind == "dummy":
        return DummyModel(prob=params["prob"], schema=schema)
    if kind == "naive_bayes":
        return NaiveBayesModel(
            class_priors=np.asarray(params["class_priors"]),
            means=np.asarray(params["means"]),
            variances=np.asarray(params["variances"]),
            schema=schema,
        )
    if kind == "logistic":
        return LogisticModel(
            weights=np.asarray(params["weights"]),
            bias=params["bias"],
            feature_means=np.asarray(params["feature_means"]),
            feature_scales=np.asarray(params["feature_scales"]),
            lambda_=params["lambda"],
            schema=schema,
            n_iters=params.get("n_iters", 0),
            converged=params.get("converged", False),
        )
    if kind == "decision_tree":
        return DecisionTreeModel(
            root=_node_from_dict(params["root"]),
            schema=schema,
            max_depth=params["max_depth"],
            min_leaf=params["min_leaf"],
        )
    raise ValueError(f"unknown model kind {kind!r}")


def save_model(model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
