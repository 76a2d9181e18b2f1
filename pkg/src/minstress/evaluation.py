"""Cross-validated evaluation: macro metrics, ROC/AUC, ablations, rank shifts.

Scores are always P(y=1). Precision, recall, and F1 are macro-averaged
over both classes with zero-denominator cells scored 0, so a constant
classifier gets credit only for the class it predicts.
"""

from __future__ import annotations

import csv
import json
import math
from collections import Counter
from dataclasses import dataclass, asdict
from typing import Callable, Mapping, Sequence

import numpy as np

from .featurize import FeaturizerConfig, feature_group
from .models import Dataset, TrainConfig, train_model

__all__ = [
    "Metrics",
    "ConfusionMatrix",
    "evaluate",
    "auc",
    "roc_points",
    "roc_auc",
    "FoldPlan",
    "kfold_split",
    "ModelCvResult",
    "cross_validate",
    "cross_validate_text",
    "ablation",
    "ablation_text",
    "metrics_mean",
    "cohen_kappa",
    "RankDelta",
    "rank_delta",
    "rank_label",
    "write_metrics_csv",
    "write_metrics_json",
    "write_roc_csv",
    "write_rank_delta_csv",
]


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float
    accuracy: float
    auc: float | None


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts for the positive class (1): true/false positives/negatives."""

    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def _check_eval_inputs(y_true, scores) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y_true, dtype=np.int64)
    s = np.asarray(scores, dtype=np.float64)
    if y.shape != s.shape or y.ndim != 1:
        raise ValueError("labels and scores must be 1-d and the same length")
    if y.size == 0:
        raise ValueError("nothing to evaluate")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0/1")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores contain non-finite values")
    return y, s


def evaluate(y_true, scores, threshold: float = 0.5) -> tuple[Metrics, ConfusionMatrix]:
    """Macro precision/recall/F1, accuracy, and midrank AUC at one threshold."""
    y, s = _check_eval_inputs(y_true, scores)
    pred = (s >= threshold).astype(np.int64)
    tp = int(np.sum((pred == 1) & (y == 1)))
    fp = int(np.sum((pred == 1) & (y == 0)))
    tn = int(np.sum((pred == 0) & (y == 0)))
    fn = int(np.sum((pred == 0) & (y == 1)))
    per_class_p, per_class_r, per_class_f = [], [], []
    for cls in (0, 1):
        pred_c = int(np.sum(pred == cls))
        true_c = int(np.sum(y == cls))
        hit = int(np.sum((pred == cls) & (y == cls)))
        p = hit / pred_c if pred_c else 0.0
        r = hit / true_c if true_c else 0.0
        f = 2.0 * p * r / (p + r) if (p + r) else 0.0
        per_class_p.append(p)
        per_class_r.append(r)
        per_class_f.append(f)
    metrics = Metrics(
        precision=float(np.mean(per_class_p)),
        recall=float(np.mean(per_class_r)),
        f1=float(np.mean(per_class_f)),
        accuracy=(tp + tn) / y.size,
        auc=auc(y, s),
    )
    return metrics, ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn)


def auc(y_true, scores) -> float | None:
    """Midrank (Mann-Whitney) AUC; None when only one class is present."""
    y, s = _check_eval_inputs(y_true, scores)
    n1 = int(np.sum(y == 1))
    n0 = y.size - n1
    if n1 == 0 or n0 == 0:
        return None
    order = np.argsort(s, kind="stable")
    ss = s[order]
    boundaries = np.flatnonzero(np.diff(ss) != 0.0) + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [ss.size]))
    midranks = (starts + ends - 1) / 2.0 + 1.0
    ranks = np.empty(y.size)
    ranks[order] = np.repeat(midranks, ends - starts)
    r1 = float(ranks[y == 1].sum())
    return (r1 - n1 * (n1 + 1) / 2.0) / (n1 * n0)


def roc_points(y_true, scores) -> list[tuple[float, float, float]]:
    """(fpr, tpr, threshold) points sweeping distinct scores descending.

    Starts at (0, 0) with an infinite threshold; the final point is
    always (1, 1) because the lowest threshold admits every row.
    """
    y, s = _check_eval_inputs(y_true, scores)
    n1 = int(np.sum(y == 1))
    n0 = y.size - n1
    if n1 == 0 or n0 == 0:
        raise ValueError("roc requires both classes")
    points = [(0.0, 0.0, math.inf)]
    for t in sorted(set(s.tolist()), reverse=True):
        pred = s >= t
        tpr = float(np.sum(pred & (y == 1))) / n1
        fpr = float(np.sum(pred & (y == 0))) / n0
        points.append((fpr, tpr, t))
    return points


def roc_auc(points: Sequence[tuple[float, float, float]]) -> float:
    """Trapezoid area under an roc_points curve."""
    fpr = np.asarray([p[0] for p in points])
    tpr = np.asarray([p[1] for p in points])
    # np.trapz was renamed in numpy 2.0
    trapezoid = getattr(np, "trapezoid", None) or np.trapz
    return float(trapezoid(tpr, fpr))


@dataclass(frozen=True)
class FoldPlan:
    """Disjoint test folds covering every row exactly once."""

    folds: tuple[tuple[np.ndarray, np.ndarray], ...]

    @property
    def k(self) -> int:
        return len(self.folds)


def kfold_split(labels, k: int, seed: int = 0) -> FoldPlan:
    """Stratified k-fold: class members are shuffled then dealt round-robin.

    One global cursor runs across classes, so per-class counts and total
    fold sizes each differ by at most one between folds.
    """
    y = np.asarray(labels, dtype=np.int64)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("labels must be a nonempty 1-d sequence")
    if k < 2 or k > y.size:
        raise ValueError(f"k must be in [2, {y.size}], got {k}")
    rng = np.random.default_rng(seed)
    assignment = np.empty(y.size, dtype=np.int64)
    cursor = 0
    for cls in sorted(set(y.tolist())):
        idx = np.flatnonzero(y == cls)
        idx = idx[rng.permutation(idx.size)]
        for i in idx:
            assignment[i] = cursor % k
            cursor += 1
    folds = []
    everything = np.arange(y.size)
    for f in range(k):
        test = everything[assignment == f]
        train = everything[assignment != f]
        folds.append((train, test))
    return FoldPlan(folds=tuple(folds))


@dataclass(frozen=True)
class ModelCvResult:
    kind: str
    fold_metrics: tuple[Metrics, ...]
    mean: Metrics
    oof_scores: np.ndarray


def metrics_mean(parts: Sequence[Metrics]) -> Metrics:
    if not parts:
        raise ValueError("no metrics to average")
    aucs = [m.auc for m in parts]
    return Metrics(
        precision=float(np.mean([m.precision for m in parts])),
        recall=float(np.mean([m.recall for m in parts])),
        f1=float(np.mean([m.f1 for m in parts])),
        accuracy=float(np.mean([m.accuracy for m in parts])),
        auc=None if any(a is None for a in aucs) else float(np.mean(aucs)),
    )


def _run_folds(
    kinds: Sequence[str],
    fold_data: Sequence[tuple[Dataset, Dataset, np.ndarray]],
    n_rows: int,
    config: TrainConfig,
) -> dict[str, ModelCvResult]:
    out = {}
    for kind in kinds:
        fold_metrics = []
        oof = np.full(n_rows, np.nan)
        for train_set, test_set, test_idx in fold_data:
            model = train_model(kind, train_set, config)
            scores = np.atleast_1d(model.predict_proba(test_set.x))
            metrics, _ = evaluate(test_set.y, scores)
            fold_metrics.append(metrics)
            oof[test_idx] = scores
        out[kind] = ModelCvResult(
            kind=kind,
            fold_metrics=tuple(fold_metrics),
            mean=metrics_mean(fold_metrics),
            oof_scores=oof,
        )
    return out


def cross_validate(
    kinds: Sequence[str],
    data: Dataset,
    plan: FoldPlan,
    config: TrainConfig = TrainConfig(),
) -> dict[str, ModelCvResult]:
    """Train and score each model kind across the folds of one plan.

    ``mean`` averages per-fold metrics; ``oof_scores`` holds each row's
    out-of-fold probability for pooled curves.
    """
    fold_data = [
        (data.subset(train), data.subset(test), test) for train, test in plan.folds
    ]
    return _run_folds(kinds, fold_data, data.n, config)


def _text_fold_features(
    token_lists: Sequence[Sequence[str]],
    labels: np.ndarray,
    plan: FoldPlan,
    feat_config: FeaturizerConfig,
) -> list[tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, tuple[str, ...]]]:
    """Per fold: (x_train, y_train refs via labels, x_test, test_idx, schema).

    The n-gram vocabulary is refit on each fold's training texts only, so
    no test token leaks into feature construction.
    """
    out = []
    for train, test in plan.folds:
        featurizer = feat_config.fit([token_lists[i] for i in train])
        x_train = featurizer.matrix([token_lists[i] for i in train])
        x_test = featurizer.matrix([token_lists[i] for i in test])
        out.append((x_train, train, x_test, test, featurizer.schema))
    return out


def _mask_columns(schema: Sequence[str], drop: str | None) -> list[int]:
    if drop is None:
        return list(range(len(schema)))
    return [i for i, name in enumerate(schema) if feature_group(name) != drop]


def cross_validate_text(
    kinds: Sequence[str],
    token_lists: Sequence[Sequence[str]],
    labels,
    plan: FoldPlan,
    feat_config: FeaturizerConfig,
    config: TrainConfig = TrainConfig(),
) -> dict[str, ModelCvResult]:
    """Text-level cross-validation with per-fold vocabulary refits."""
    y = np.asarray(labels, dtype=np.int64)
    if len(token_lists) != y.size:
        raise ValueError("token_lists and labels disagree in length")
    folds = _text_fold_features(token_lists, y, plan, feat_config)
    fold_data = [
        (Dataset(x_tr, y[tr], schema), Dataset(x_te, y[te], schema), te)
        for x_tr, tr, x_te, te, schema in folds
    ]
    return _run_folds(kinds, fold_data, y.size, config)


def _schema_groups(schema: Sequence[str]) -> list[str]:
    seen = []
    for name in schema:
        g = feature_group(name)
        if g != "other" and g not in seen:
            seen.append(g)
    return seen


def ablation(
    data: Dataset,
    plan: FoldPlan,
    config: TrainConfig = TrainConfig(),
    kind: str = "logistic",
    groups: Sequence[str] | None = None,
) -> dict[str, ModelCvResult]:
    """Cross-validate the full schema and the schema minus each group.

    Keys are "full" and "-<group>". Removing a group whose columns are
    constant leaves every metric unchanged.
    """
    if groups is None:
        groups = _schema_groups(data.schema)
    out = {}
    for name, drop in [("full", None)] + [(f"-{g}", g) for g in groups]:
        subset = data.select_columns(_mask_columns(data.schema, drop))
        out[name] = cross_validate([kind], subset, plan, config)[kind]
    return out


def ablation_text(
    token_lists: Sequence[Sequence[str]],
    labels,
    plan: FoldPlan,
    feat_config: FeaturizerConfig,
    config: TrainConfig = TrainConfig(),
    kind: str = "logistic",
    groups: Sequence[str] | None = None,
) -> dict[str, ModelCvResult]:
    """Text-level ablation reusing one per-fold featurization for all configs."""
    y = np.asarray(labels, dtype=np.int64)
    if len(token_lists) != y.size:
        raise ValueError("token_lists and labels disagree in length")
    folds = _text_fold_features(token_lists, y, plan, feat_config)
    if groups is None:
        groups = _schema_groups(folds[0][4]) if folds else []
    out = {}
    for name, drop in [("full", None)] + [(f"-{g}", g) for g in groups]:
        fold_data = []
        for x_tr, tr, x_te, te, schema in folds:
            keep = _mask_columns(schema, drop)
            sub_schema = tuple(schema[i] for i in keep)
            fold_data.append(
                (
                    Dataset(x_tr[:, keep], y[tr], sub_schema),
                    Dataset(x_te[:, keep], y[te], sub_schema),
                    te,
                )
            )
        out[name] = _run_folds([kind], fold_data, y.size, config)[kind]
    return out


def cohen_kappa(labels_a: Sequence, labels_b: Sequence) -> float:
    """Chance-corrected agreement between two annotators over shared items."""
    a = list(labels_a)
    b = list(labels_b)
    if len(a) != len(b):
        raise ValueError("annotator label sequences differ in length")
    if not a:
        raise ValueError("no items to compare")
    n = len(a)
    p_o = sum(1 for x, y in zip(a, b) if x == y) / n
    count_a = Counter(a)
    count_b = Counter(b)
    p_e = sum(count_a[l] * count_b.get(l, 0) for l in count_a) / (n * n)
    if p_e == 1.0:
        return 1.0
    return (p_o - p_e) / (1.0 - p_e)


@dataclass(frozen=True)
class RankDelta:
    """How far a feature moved between two coefficient rankings.

    delta is rank_b - rank_a; direction is "\u2193" when the feature lost
    ground (rank number grew, toward MR), "\u2191" when it gained, "-"
    when unchanged.
    Ranks in the bottom half are also reported relative to the maximum
    rank ("MR", "MR-3") because absolute positions there are noisy.
    """

    feature: str
    rank_a: int
    rank_b: int
    delta: int
    direction: str
    label_a: str
    label_b: str


def rank_label(rank: int, total: int) -> str:
    if rank * 2 <= total:
        return str(rank)
    if rank == total:
        return "MR"
    return f"MR-{total - rank}"


def rank_delta(
    coef_a: Sequence[tuple[str, float]],
    coef_b: Sequence[tuple[str, float]],
    features: Sequence[str] | None = None,
) -> list[RankDelta]:
    """Rank movement of selected features between two weight rankings.

    Both rankings must cover the same feature set. With ``features``
    None, every feature is reported in ranking-A order.
    """
    rank_a = {name: i + 1 for i, (name, _) in enumerate(coef_a)}
    rank_b = {name: i + 1 for i, (name, _) in enumerate(coef_b)}
    if set(rank_a) != set(rank_b):
        raise ValueError("coefficient rankings cover different features")
    if features is None:
        features = [name for name, _ in coef_a]
    total = len(rank_a)
    out = []
    for feat in features:
        if feat not in rank_a:
            raise ValueError(f"unknown feature {feat!r}")
        ra, rb = rank_a[feat], rank_b[feat]
        delta = rb - ra
        direction = "\u2193" if delta > 0 else ("\u2191" if delta < 0 else "-")
        out.append(
            RankDelta(
                feature=feat,
                rank_a=ra,
                rank_b=rb,
                delta=delta,
                direction=direction,
                label_a=rank_label(ra, total),
                label_b=rank_label(rb, total),
            )
        )
    return out


def _fmt(value: float | None) -> str:
    return "" if value is None else f"{value:.6f}"


def write_metrics_csv(rows: Sequence[tuple[str, Metrics]], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "precision", "recall", "f1", "accuracy", "auc"])
        for name, m in rows:
            writer.writerow(
                [name, _fmt(m.precision), _fmt(m.recall), _fmt(m.f1), _fmt(m.accuracy), _fmt(m.auc)]
            )


def write_metrics_json(rows: Sequence[tuple[str, Metrics]], path) -> None:
    payload = {name: asdict(m) for name, m in rows}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_roc_csv(points: Sequence[tuple[float, float, float]], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fpr", "tpr", "threshold"])
        for fpr, tpr, threshold in points:
            thr = "inf" if math.isinf(threshold) else f"{threshold:.6f}"
            writer.writerow([f"{fpr:.6f}", f"{tpr:.6f}", thr])


def write_rank_delta_csv(shifts: Sequence[RankDelta], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["feature", "rank_a", "label_a", "rank_b", "label_b", "delta", "direction"]
        )
        for s in shifts:
            writer.writerow(
                [s.feature, s.rank_a, s.label_a, s.rank_b, s.label_b, s.delta, s.direction]
            )
