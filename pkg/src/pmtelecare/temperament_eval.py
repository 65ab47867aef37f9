"""Temperament scoring and classifier evaluation.

Questionnaire scoring over a configurable schema, confusion-matrix metrics
(kept as exact rationals), Pearson correlation, seeded K-fold splitting and
a nearest-centroid reference classifier behind a minimal fit/predict
interface.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (
    BadK,
    DimensionMismatch,
    EmptyInput,
    LengthMismatch,
    MissingClass,
    SchemaMismatch,
    ZeroVariance,
)

WARM_AXIS_VALUES = ("warm", "moderate", "cold")
WET_AXIS_VALUES = ("dry", "moderate", "wet")


@dataclass(frozen=True)
class TemperamentLabel:
    warm_axis: str
    wet_axis: str

    def __post_init__(self):
        if self.warm_axis not in WARM_AXIS_VALUES:
            raise ValueError(f"warm_axis must be one of {WARM_AXIS_VALUES}")
        if self.wet_axis not in WET_AXIS_VALUES:
            raise ValueError(f"wet_axis must be one of {WET_AXIS_VALUES}")

    def summary(self) -> str:
        return f"{self.warm_axis}/{self.wet_axis}"

    def as_dict(self) -> dict:
        return {"warm_axis": self.warm_axis, "wet_axis": self.wet_axis}

    @classmethod
    def from_dict(cls, d: dict) -> "TemperamentLabel":
        return cls(d["warm_axis"], d["wet_axis"])


@dataclass(frozen=True)
class MmqItem:
    id: str
    axis: str  # "warm" | "wet"
    weight: float = 1.0

    def __post_init__(self):
        if self.axis not in ("warm", "wet"):
            raise ValueError("item axis must be 'warm' or 'wet'")
        if not (self.weight > 0):
            raise ValueError("item weight must be > 0")


@dataclass(frozen=True)
class MmqSchema:
    """Configurable questionnaire schema: items contribute to one axis each;
    per-axis thresholds split the weighted score into the three bands."""

    items: tuple[MmqItem, ...]
    thresholds: dict = field(
        default_factory=lambda: {"warm": (0.33, 0.66), "wet": (0.33, 0.66)}
    )
    version: str = "v1"

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        for axis in ("warm", "wet"):
            lo, hi = self.thresholds[axis]
            if not (lo < hi):
                raise ValueError(f"{axis} thresholds must satisfy t_low < t_high")
        seen = set()
        for item in self.items:
            if item.id in seen:
                raise ValueError(f"duplicate item id {item.id!r}")
            seen.add(item.id)


def default_mmq_schema() -> MmqSchema:
    """Ten-item schema, five per axis, unit weights, thresholds (0.33, 0.66)."""
    items = tuple(
        [MmqItem(f"warm_q{i + 1}", "warm") for i in range(5)]
        + [MmqItem(f"wet_q{i + 1}", "wet") for i in range(5)]
    )
    return MmqSchema(items)


def score_mmq(schema: MmqSchema, responses: dict[str, float]) -> TemperamentLabel:
    """Weighted per-axis mean score mapped through the threshold bands.

    Scores below t_low read cold/dry, within [t_low, t_high] moderate, above
    t_high warm/wet.
    """
    expected = {item.id for item in schema.items}
    if set(responses) != expected:
        raise SchemaMismatch(
            f"responses cover {sorted(responses)} but schema expects {sorted(expected)}"
        )
    for item_id, score in responses.items():
        if not (0.0 <= score <= 1.0):
            raise SchemaMismatch(f"score for {item_id!r} outside [0, 1]: {score}")
    axis_values = {}
    for axis, low_label, high_label in (("warm", "cold", "warm"), ("wet", "dry", "wet")):
        items = [it for it in schema.items if it.axis == axis]
        total_w = sum(it.weight for it in items)
        score = sum(it.weight * responses[it.id] for it in items) / total_w
        t_low, t_high = schema.thresholds[axis]
        if score < t_low:
            axis_values[axis] = low_label
        elif score > t_high:
            axis_values[axis] = high_label
        else:
            axis_values[axis] = "moderate"
    return TemperamentLabel(axis_values["warm"], axis_values["wet"])


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        counts = (self.tp, self.tn, self.fp, self.fn)
        if any(c < 0 for c in counts):
            raise ValueError("counts must be non-negative")
        if sum(counts) < 1:
            raise EmptyInput("confusion matrix must count at least one item")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


def confusion_matrix(pred, truth, positive_class) -> ConfusionMatrix:
    """Binary one-vs-rest counts; multi-valued labels reduce against
    positive_class."""
    pred, truth = list(pred), list(truth)
    if len(pred) != len(truth):
        raise LengthMismatch(f"{len(pred)} predictions vs {len(truth)} truths")
    if not pred:
        raise EmptyInput("need at least one labelled pair")
    tp = sum(p == positive_class and t == positive_class for p, t in zip(pred, truth))
    tn = sum(p != positive_class and t != positive_class for p, t in zip(pred, truth))
    fp = sum(p == positive_class and t != positive_class for p, t in zip(pred, truth))
    fn = sum(p != positive_class and t == positive_class for p, t in zip(pred, truth))
    return ConfusionMatrix(tp, tn, fp, fn)


@dataclass(frozen=True)
class Metrics:
    """Exact rational accuracy / sensitivity / specificity.

    A zero denominator leaves the metric None (undefined) rather than NaN,
    so undefined folds can never inflate averages silently.
    """

    accuracy: Fraction
    sensitivity: Fraction | None
    specificity: Fraction | None

    def as_dict(self) -> dict:
        return {
            "accuracy": float(self.accuracy),
            "sensitivity": None if self.sensitivity is None else float(self.sensitivity),
            "specificity": None if self.specificity is None else float(self.specificity),
        }


def metrics(cm: ConfusionMatrix) -> Metrics:
    """Accuracy (tp+tn)/total, sensitivity tp/(tp+fn), specificity tn/(fp+tn)."""
    accuracy = Fraction(cm.tp + cm.tn, cm.total)
    sensitivity = Fraction(cm.tp, cm.tp + cm.fn) if cm.tp + cm.fn else None
    specificity = Fraction(cm.tn, cm.fp + cm.tn) if cm.fp + cm.tn else None
    return Metrics(accuracy, sensitivity, specificity)


def pearson_r(x, y) -> float:
    """Pearson correlation: centered dot product over the product of
    root-sum-square deviations."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch(f"shapes {x.shape} vs {y.shape}")
    if x.size < 2:
        raise LengthMismatch("need at least 2 points")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float(np.sqrt(dx @ dx))
    sy = float(np.sqrt(dy @ dy))
    if sx == 0 or sy == 0:
        raise ZeroVariance("both inputs need nonzero variance")
    return float((dx @ dy) / (sx * sy))


def kfold_split(n: int, k: int, seed: int) -> list[np.ndarray]:
    """Seeded partition of range(n) into k disjoint test folds whose sizes
    differ by at most one."""
    if not (2 <= k <= n):
        raise BadK(f"need 2 <= k <= n, got k={k}, n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    base, extra = divmod(n, k)
    folds = []
    start = 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        folds.append(np.sort(perm[start : start + size]))
        start += size
    return folds


class NearestCentroidClassifier:
    """Per-class centroids on z-scored features; predicts the closest one.

    Z-scoring uses the training mean/std (zero-variance features pass
    through unscaled), so the decision is invariant under any positive
    rescaling applied consistently at fit and predict time. Distance ties
    resolve to the class seen first in the training labels.
    """

    def __init__(self):
        self.classes_: list = []
        self._mu = None
        self._sigma = None
        self._centroids = None

    def fit(self, features, labels) -> "NearestCentroidClassifier":
        x = np.asarray(features, dtype=np.float64)
        labels = list(labels)
        if x.ndim != 2 or x.shape[0] != len(labels):
            raise DimensionMismatch("features must be (n_samples, n_features) matching labels")
        classes = list(dict.fromkeys(labels))
        if len(classes) < 2:
            raise MissingClass(f"training set has {len(classes)} class(es), need >= 2")
        self._mu = x.mean(axis=0)
        self._sigma = x.std(axis=0)
        self._sigma = np.where(self._sigma == 0, 1.0, self._sigma)
        z = (x - self._mu) / self._sigma
        self.classes_ = classes
        lab = np.asarray(labels, dtype=object)
        self._centroids = np.stack([z[lab == c].mean(axis=0) for c in classes])
        return self

    def predict(self, features) -> list:
        if self._centroids is None:
            raise MissingClass("classifier is not fitted")
        x = np.atleast_2d(np.asarray(features, dtype=np.float64))
        if x.shape[1] != self._mu.size:
            raise DimensionMismatch(
                f"feature dimension {x.shape[1]} != fitted {self._mu.size}"
            )
        z = (x - self._mu) / self._sigma
        d2 = ((z[:, None, :] - self._centroids[None, :, :]) ** 2).sum(axis=2)
        return [self.classes_[int(i)] for i in np.argmin(d2, axis=1)]


@dataclass(frozen=True)
class FoldResult:
    fold: int
    test_indices: tuple[int, ...]
    metrics: Metrics

    def as_dict(self) -> dict:
        d = {"fold": self.fold, "test_size": len(self.test_indices)}
        d.update(self.metrics.as_dict())
        return d


@dataclass(frozen=True)
class EvalReport:
    k: int
    seed: int
    positive_class: str
    pooled: Metrics
    folds: tuple[FoldResult, ...]
    n: int

    def as_dict(self) -> dict:
        return {
            "k": self.k,
            "seed": self.seed,
            "n": self.n,
            "positive_class": self.positive_class,
            "pooled": self.pooled.as_dict(),
            "folds": [f.as_dict() for f in self.folds],
        }


def cross_validate(
    features,
    labels,
    k: int,
    seed: int,
    classifier_factory=NearestCentroidClassifier,
    positive_class: str | None = None,
) -> EvalReport:
    """Seeded K-fold cross-validation with pooled and per-fold metrics.

    Each fold is predicted by a model fitted on the remaining k-1 folds;
    predictions are pooled before computing the overall confusion metrics.
    positive_class defaults to the most frequent label (earliest first
    appearance wins ties).
    """
    x = np.asarray(features, dtype=np.float64)
    labels = list(labels)
    n = len(labels)
    if x.shape[0] != n:
        raise LengthMismatch("features and labels disagree in length")
    if positive_class is None:
        order = list(dict.fromkeys(labels))
        positive_class = max(order, key=lambda c: (labels.count(c), -order.index(c)))
    folds = kfold_split(n, k, seed)
    pooled_pred: list = [None] * n
    fold_results = []
    for fi, test_idx in enumerate(folds):
        mask = np.zeros(n, dtype=bool)
        mask[test_idx] = True
        clf = classifier_factory()
        clf.fit(x[~mask], [labels[i] for i in range(n) if not mask[i]])
        preds = clf.predict(x[mask])
        for i, p in zip(test_idx, preds):
            pooled_pred[int(i)] = p
        fold_cm = confusion_matrix(preds, [labels[int(i)] for i in test_idx], positive_class)
        fold_results.append(FoldResult(fi, tuple(int(i) for i in test_idx), metrics(fold_cm)))
    pooled_cm = confusion_matrix(pooled_pred, labels, positive_class)
    return EvalReport(
        k=k,
        seed=seed,
        positive_class=positive_class,
        pooled=metrics(pooled_cm),
        folds=tuple(fold_results),
        n=n,
    )


# --- cohort dataset interchange ---------------------------------------------


def write_cohort_csv(path, ids, warm_labels, wet_labels, features) -> None:
    """One row per participant: id,label_warm,label_wet,f1..fm."""
    features = np.asarray(features, dtype=np.float64)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(
            ["id", "label_warm", "label_wet"]
            + [f"f{i + 1}" for i in range(features.shape[1])]
        )
        for i, sid in enumerate(ids):
            writer.writerow(
                [sid, warm_labels[i], wet_labels[i]]
                + [repr(float(v)) for v in features[i]]
            )


def read_cohort_csv(path):
    """Inverse of :func:`write_cohort_csv`; returns (ids, warm, wet, features)."""
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if header[:3] != ["id", "label_warm", "label_wet"]:
            raise ValueError(f"unexpected cohort CSV header: {header[:3]}")
        ids, warm, wet, rows = [], [], [], []
        for row in reader:
            if not row:
                continue
            ids.append(row[0])
            warm.append(row[1])
            wet.append(row[2])
            rows.append([float(v) for v in row[3:]])
    return ids, warm, wet, np.asarray(rows, dtype=np.float64)
