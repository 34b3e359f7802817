"""Temporal split, thresholded classification metrics, ROC curve and AUC."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from datetime import datetime
from typing import IO, Sequence

import numpy as np

from alertcast.features import FeatureMatrix

DEFAULT_SPLIT = datetime(2024, 7, 1)


@dataclass(frozen=True)
class SplitSpec:
    boundary: datetime = DEFAULT_SPLIT


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class EvalReport:
    accuracy: float
    classes: dict[str, ClassMetrics]
    tp: int
    fp: int
    tn: int
    fn: int
    threshold: float = 0.5
    roc: list[tuple[float, float]] = field(default_factory=list)
    auc: float | None = None

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def to_dict(self) -> dict:
        d = asdict(self)
        d["roc"] = [list(p) for p in self.roc]
        d["n"] = self.n
        support = {k: m.support for k, m in self.classes.items()}
        d["macro_avg"] = {
            key: float(np.mean([getattr(m, key) for m in self.classes.values()]))
            for key in ("precision", "recall", "f1")
        }
        d["weighted_avg"] = {
            key: float(sum(getattr(m, key) * support[k] for k, m in self.classes.items()) / self.n)
            for key in ("precision", "recall", "f1")
        }
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def time_split(matrix: FeatureMatrix, spec: SplitSpec = SplitSpec()) -> tuple[FeatureMatrix, FeatureMatrix]:
    """Rows stamped before the boundary train; rows at or after it test."""
    window = matrix.window
    if not window.start <= spec.boundary < window.end:
        raise ValueError(f"split boundary {spec.boundary} lies outside the study window")
    cut = window.minute_of(spec.boundary)
    before = matrix.row_stamp < cut
    if not before.any():
        raise ValueError(f"train side is empty: no rows before {spec.boundary}")
    if before.all():
        raise ValueError(f"test side is empty: no rows at or after {spec.boundary}")
    return matrix.take(np.flatnonzero(before)), matrix.take(np.flatnonzero(~before))


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def _check_pair(labels, scores) -> tuple[np.ndarray, np.ndarray]:
    labels = np.asarray(labels).astype(np.int64)
    scores = np.asarray(scores, dtype=np.float64)
    if labels.shape != scores.shape or labels.ndim != 1:
        raise ValueError(f"labels and scores must be equal-length vectors, got {labels.shape} and {scores.shape}")
    if labels.size == 0:
        raise ValueError("need at least one labelled score")
    if not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be 0/1")
    return labels, scores


def classification_report(labels, scores, threshold: float = 0.5) -> EvalReport:
    labels, scores = _check_pair(labels, scores)
    pred = scores >= threshold
    pos = labels == 1
    tp = int(np.sum(pred & pos))
    fp = int(np.sum(pred & ~pos))
    tn = int(np.sum(~pred & ~pos))
    fn = int(np.sum(~pred & pos))

    def per_class(hit: int, false_alarm: int, miss: int) -> ClassMetrics:
        precision = _ratio(hit, hit + false_alarm)
        recall = _ratio(hit, hit + miss)
        f1 = _ratio(2 * hit, 2 * hit + false_alarm + miss)
        return ClassMetrics(precision, recall, f1, hit + miss)

    return EvalReport(
        accuracy=(tp + tn) / labels.size,
        classes={"0": per_class(tn, fn, fp), "1": per_class(tp, fp, fn)},
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
        threshold=threshold,
    )


def roc_curve(labels, scores) -> list[tuple[float, float]]:
    """(fpr, tpr) after each distinct score, highest first, starting from (0, 0)."""
    labels, scores = _check_pair(labels, scores)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs both classes among the labels")
    order = np.argsort(-scores, kind="stable")
    s, y = scores[order], labels[order]
    tps = np.cumsum(y)
    fps = np.arange(1, y.size + 1) - tps
    # last index of each run of equal scores
    ends = np.flatnonzero(np.append(s[1:] != s[:-1], True))
    points = [(0.0, 0.0)]
    points += [(fps[i] / n_neg, tps[i] / n_pos) for i in ends.tolist()]
    return [(float(f), float(t)) for f, t in points]


def auc(points: Sequence[tuple[float, float]]) -> float:
    """Trapezoidal area under a ROC polyline."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise ValueError("need at least two (fpr, tpr) points")
    return float(np.trapezoid(pts[:, 1], pts[:, 0]))


def evaluate_scores(labels, scores, threshold: float = 0.5) -> EvalReport:
    report = classification_report(labels, scores, threshold)
    report.roc = roc_curve(labels, scores)
    report.auc = auc(report.roc)
    return report


def write_roc_csv(points: Sequence[tuple[float, float]], stream: IO[str]) -> None:
    stream.write("fpr,tpr\n")
    for f, t in points:
        stream.write(f"{f!r},{t!r}\n")
