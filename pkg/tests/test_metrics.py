import json
from datetime import datetime, timedelta

import numpy as np
import pytest

from alertcast.features import FeatureMatrix
from alertcast.ingest import StudyWindow
from alertcast.metrics import (
    SplitSpec,
    auc,
    classification_report,
    evaluate_scores,
    roc_curve,
    time_split,
)


def toy_matrix(stamps, window=StudyWindow.days(1)):
    stamps = np.asarray(stamps, dtype=np.int64)
    n = len(stamps)
    return FeatureMatrix(
        X=np.arange(n, dtype=np.int32).reshape(-1, 1),
        target=(np.arange(n) % 2).astype(np.uint8),
        row_stamp=stamps,
        column_names=("x",),
        window=window,
    )


def test_time_split_boundary_goes_to_test():
    window = StudyWindow.days(1)
    k = 100
    train, test = time_split(toy_matrix([k - 1, k], window), SplitSpec(window.stamp(k)))
    assert train.row_stamp.tolist() == [k - 1]
    assert test.row_stamp.tolist() == [k]


def test_time_split_empty_sides():
    window = StudyWindow.days(1)
    with pytest.raises(ValueError, match="train side"):
        time_split(toy_matrix([5, 6], window), SplitSpec(window.stamp(2)))
    with pytest.raises(ValueError, match="test side"):
        time_split(toy_matrix([5, 6], window), SplitSpec(window.stamp(7)))
    with pytest.raises(ValueError, match="outside"):
        time_split(toy_matrix([5, 6], window), SplitSpec(datetime(2030, 1, 1)))


def test_time_split_matches_comparison(rng):
    stamps = np.sort(rng.integers(0, 1440, 300))
    window = StudyWindow.days(1)
    for cut in rng.integers(stamps[0] + 1, stamps[-1], 20):
        train, test = time_split(toy_matrix(stamps, window), SplitSpec(window.start + timedelta(minutes=int(cut))))
        assert train.row_stamp.tolist() == [s for s in stamps.tolist() if s < cut]
        assert test.row_stamp.tolist() == [s for s in stamps.tolist() if s >= cut]
        assert np.array_equal(np.concatenate([train.X, test.X]), np.arange(300).reshape(-1, 1))


def test_report_perfect_predictions():
    r = classification_report([0, 1, 1, 0], [0.1, 0.9, 0.7, 0.2])
    assert r.accuracy == 1.0
    assert r.classes["0"].f1 == 1.0 and r.classes["1"].f1 == 1.0


def test_report_all_positive():
    r = classification_report([1, 0, 1, 0], [0.9] * 4)
    assert r.accuracy == 0.5
    assert r.classes["1"].precision == 0.5 and r.classes["1"].recall == 1.0
    assert r.classes["0"].precision == 0.0 and r.classes["0"].recall == 0.0 and r.classes["0"].f1 == 0.0


def test_report_threshold_is_inclusive():
    r = classification_report([1], [0.5])
    assert r.tp == 1


def test_report_length_mismatch():
    with pytest.raises(ValueError):
        classification_report([0, 1], [0.5])


def counting_oracle(labels, scores, threshold=0.5):
    tp = fp = tn = fn = 0
    for y, s in zip(labels, scores):
        p = s >= threshold
        if p and y:
            tp += 1
        elif p:
            fp += 1
        elif y:
            fn += 1
        else:
            tn += 1
    return tp, fp, tn, fn


def test_report_matches_counting_oracle(rng):
    labels = rng.integers(0, 2, 1000)
    scores = np.round(rng.random(1000), 2)
    r = classification_report(labels, scores)
    tp, fp, tn, fn = counting_oracle(labels.tolist(), scores.tolist())
    assert (r.tp, r.fp, r.tn, r.fn) == (tp, fp, tn, fn)
    assert r.accuracy == (tp + tn) / 1000
    assert r.classes["1"].precision == tp / (tp + fp)
    assert r.classes["1"].recall == tp / (tp + fn)
    assert r.classes["0"].support == tn + fp


def test_roc_examples():
    assert roc_curve([1, 1, 0], [0.9, 0.8, 0.1]) == [(0.0, 0.0), (0.0, 0.5), (0.0, 1.0), (1.0, 1.0)]
    assert roc_curve([1, 0, 1, 0], [0.3] * 4) == [(0.0, 0.0), (1.0, 1.0)]
    with pytest.raises(ValueError):
        roc_curve([1, 1], [0.2, 0.3])


def test_auc_examples():
    assert auc(roc_curve([1, 1, 0], [0.9, 0.8, 0.1])) == 1.0
    assert auc(roc_curve([1, 0, 1, 0], [0.3] * 4)) == 0.5


def threshold_oracle(labels, scores):
    pos = sum(labels)
    neg = len(labels) - pos
    pts = [(0.0, 0.0)]
    for t in sorted(set(scores), reverse=True):
        tp = sum(1 for y, s in zip(labels, scores) if s >= t and y)
        fp = sum(1 for y, s in zip(labels, scores) if s >= t and not y)
        pts.append((fp / neg, tp / pos))
    return pts


def mann_whitney(labels, scores):
    pos = [s for y, s in zip(labels, scores) if y]
    neg = [s for y, s in zip(labels, scores) if not y]
    wins = sum(1.0 if p > q else 0.5 if p == q else 0.0 for p in pos for q in neg)
    return wins / (len(pos) * len(neg))


def test_roc_and_auc_match_oracles(rng):
    for _ in range(30):
        n = int(rng.integers(2, 120))
        labels = rng.integers(0, 2, n)
        labels[:2] = [0, 1]
        scores = rng.integers(0, 10, n) / 10  # plenty of ties
        pts = roc_curve(labels, scores)
        assert pts == threshold_oracle(labels.tolist(), scores.tolist())
        assert abs(auc(pts) - mann_whitney(labels.tolist(), scores.tolist())) <= 1e-12


def test_roc_shape_and_invariances(rng):
    labels = rng.integers(0, 2, 300)
    scores = rng.random(300)
    pts = np.array(roc_curve(labels, scores))
    assert tuple(pts[0]) == (0.0, 0.0) and tuple(pts[-1]) == (1.0, 1.0)
    assert (np.diff(pts, axis=0) >= 0).all()
    a = auc(pts)
    assert abs(a + auc(roc_curve(labels, -scores)) - 1) <= 1e-12
    assert roc_curve(labels, np.exp(3 * scores) + 7) == roc_curve(labels, scores)


def test_evaluate_scores_json():
    r = evaluate_scores([0, 1, 1, 0], [0.2, 0.8, 0.4, 0.6])
    d = json.loads(r.to_json())
    assert d["auc"] == 0.75
    assert d["n"] == 4 and d["tp"] + d["fp"] + d["tn"] + d["fn"] == 4
    assert d["roc"][0] == [0.0, 0.0]
    assert set(d) >= {"accuracy", "classes", "macro_avg", "weighted_avg", "threshold"}
