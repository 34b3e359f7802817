"""Random forest of CART trees (Gini impurity) grown from scratch on numpy arrays.

Each tree is stored as flat node arrays. A node is a leaf when its
``feature`` entry is -1; otherwise rows with ``x[feature] <= threshold`` go to
``left`` and the rest to ``right``. ``value`` is the class-1 fraction of the
bootstrap rows that reached the node and ``n_samples`` their count.

Tree ``i`` draws all of its randomness from a stream seeded by
``SeedSequence(seed, spawn_key=(i,))``, so a forest is a pure function of
(data, params) whatever the number of worker processes.
"""

from __future__ import annotations

import json
import math
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np

from alertcast.features import FeatureMatrix

MODEL_FORMAT = "alertcast.forest"
MODEL_VERSION = 1

# decreases closer than this are treated as ties and resolved by (feature, threshold)
TIE_TOL = 1e-12

LEAF = -1


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 500
    max_depth: int | None = None
    min_samples_leaf: int = 50
    mtry: int | None = None  # None: ceil(sqrt(n_features))
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise ValueError("n_trees must be at least 1")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be at least 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be non-negative")
        if self.mtry is not None and self.mtry < 1:
            raise ValueError("mtry must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")

    def resolve_mtry(self, n_features: int) -> int:
        mtry = self.mtry if self.mtry is not None else math.ceil(math.sqrt(n_features))
        if not 1 <= mtry <= n_features:
            raise ValueError(f"mtry={mtry} outside [1, {n_features}]")
        return mtry


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    decrease: float


@dataclass(eq=False)
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def is_leaf(self) -> np.ndarray:
        return self.feature == LEAF

    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for node in range(self.n_nodes):  # children always follow their parent
            if self.feature[node] != LEAF:
                depth[self.left[node]] = depth[self.right[node]] = depth[node] + 1
        return int(depth.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row of ``X``."""
        node = np.zeros(len(X), dtype=np.int64)
        active = np.flatnonzero(self.feature[node] != LEAF)
        while active.size:
            at = node[active]
            go_left = X[active, self.feature[at]] <= self.threshold[at]
            node[active] = np.where(go_left, self.left[at], self.right[at])
            active = active[self.feature[node[active]] != LEAF]
        return node

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "n_samples": self.n_samples.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(
            feature=np.asarray(d["feature"], dtype=np.int32),
            threshold=np.asarray(d["threshold"], dtype=np.float64),
            left=np.asarray(d["left"], dtype=np.int32),
            right=np.asarray(d["right"], dtype=np.int32),
            value=np.asarray(d["value"], dtype=np.float64),
            n_samples=np.asarray(d["n_samples"], dtype=np.int64),
        )


@dataclass(eq=False)
class ForestModel:
    trees: list[Tree]
    params: ForestParams
    column_names: tuple[str, ...]
    importance: np.ndarray
    meta: dict[str, Any] = field(default_factory=dict)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return predict_proba_batch(self, X)

    def to_json(self) -> str:
        payload = {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "params": asdict(self.params),
            "column_names": list(self.column_names),
            "importance": self.importance.tolist(),
            "meta": self.meta,
            "trees": [t.to_dict() for t in self.trees],
        }
        return json.dumps(payload, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "ForestModel":
        payload = json.loads(text)
        if payload.get("format") != MODEL_FORMAT:
            raise ValueError("not a serialized forest model")
        if payload.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {payload.get('version')}")
        return cls(
            trees=[Tree.from_dict(t) for t in payload["trees"]],
            params=ForestParams(**payload["params"]),
            column_names=tuple(payload["column_names"]),
            importance=np.asarray(payload["importance"], dtype=np.float64),
            meta=payload.get("meta", {}),
        )


def gini_impurity(n_class0: int, n_class1: int) -> float:
    n = n_class0 + n_class1
    if n < 1:
        raise ValueError("Gini impurity of an empty node is undefined")
    p0, p1 = n_class0 / n, n_class1 / n
    return 1.0 - p0 * p0 - p1 * p1


def _scan_splits(sub: np.ndarray, y: np.ndarray, features: np.ndarray, min_leaf: int) -> Split | None:
    # sub: candidate columns x node rows, columns in ascending feature order
    n = len(y)
    lo, hi = min_leaf - 1, n - min_leaf  # split after sorted position i keeps i+1 rows left
    if hi <= lo:
        return None
    # tie order among equal values is irrelevant: only distinct-value boundaries are scored
    order = np.argsort(sub, axis=1)
    values = np.take_along_axis(sub, order, axis=1)
    labels = y[order]

    c1 = int(y.sum())
    c0 = n - c1
    left1 = np.cumsum(labels[:, :hi], axis=1, dtype=np.int64)[:, lo:]
    n_left = np.arange(lo + 1, hi + 1, dtype=np.int64)
    n_right = n - n_left
    left0 = n_left - left1
    right1 = c1 - left1
    right0 = n_right - right1
    # sum over children of (c0^2 + c1^2) / n_child; decrease = (score - parent) / n
    score = (left0 * left0 + left1 * left1) / n_left + (right0 * right0 + right1 * right1) / n_right
    decrease = (score - (c0 * c0 + c1 * c1) / n) / n

    distinct = values[:, lo + 1 : hi + 1] != values[:, lo:hi]
    decrease = np.where(distinct, decrease, -np.inf)
    best = decrease.max()
    if not best > TIE_TOL:
        return None
    # first tie in (feature, position) order: lowest feature index, then lowest threshold
    col, pos = divmod(int(np.argmax(decrease >= best - TIE_TOL)), decrease.shape[1])
    a = float(values[col, lo + pos])
    b = float(values[col, lo + pos + 1])
    threshold = (a + b) / 2.0
    if threshold >= b:  # adjacent floats: midpoint rounds up
        threshold = a
    return Split(int(features[col]), threshold, float(decrease[col, pos]))


def best_split(
    X: np.ndarray,
    y: np.ndarray,
    candidate_features: Sequence[int],
    min_samples_leaf: int = 1,
) -> Split | None:
    """Exhaustive Gini split search over ``candidate_features`` of the node rows ``X``.

    Thresholds are midpoints between consecutive distinct sorted values. Splits
    leaving fewer than ``min_samples_leaf`` rows on either side are skipped.
    Returns ``None`` when no admissible split lowers the impurity.
    """
    X = np.asarray(X)
    y = np.asarray(y, dtype=np.int64)
    if len(y) == 0:
        raise ValueError("cannot split an empty node")
    features = np.unique(np.asarray(candidate_features, dtype=np.int64))
    return _scan_splits(np.ascontiguousarray(X[:, features].T), y, features, min_samples_leaf)


def grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    rows: np.ndarray,
    params: ForestParams,
    rng: np.random.Generator,
) -> Tree:
    rows = np.asarray(rows, dtype=np.int64)
    if rows.size == 0:
        raise ValueError("cannot grow a tree on an empty sample")
    n_features = X.shape[1]
    mtry = params.resolve_mtry(n_features)
    XT = np.ascontiguousarray(X.T)
    min_leaf = params.min_samples_leaf

    feature: list[int] = [LEAF]
    threshold: list[float] = [0.0]
    left: list[int] = [LEAF]
    right: list[int] = [LEAF]
    value: list[float] = [0.0]
    n_samples: list[int] = [0]

    stack = [(0, rows, 0)]
    while stack:
        node, idx, depth = stack.pop()
        y_node = y[idx]
        n = idx.size
        c1 = int(y_node.sum())
        value[node] = c1 / n
        n_samples[node] = n
        if c1 == 0 or c1 == n or n < 2 * min_leaf:
            continue
        if params.max_depth is not None and depth >= params.max_depth:
            continue
        candidates = np.sort(rng.choice(n_features, size=mtry, replace=False))
        split = _scan_splits(XT[candidates[:, None], idx], y_node, candidates, min_leaf)
        if split is None:
            continue

        go_left = X[idx, split.feature] <= split.threshold
        left_id, right_id = len(feature), len(feature) + 1
        for _ in range(2):
            feature.append(LEAF)
            threshold.append(0.0)
            left.append(LEAF)
            right.append(LEAF)
            value.append(0.0)
            n_samples.append(0)
        feature[node], threshold[node] = split.feature, split.threshold
        left[node], right[node] = left_id, right_id
        # left subtree is expanded first
        stack.append((right_id, idx[~go_left], depth + 1))
        stack.append((left_id, idx[go_left], depth + 1))

    return Tree(
        feature=np.asarray(feature, dtype=np.int32),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        value=np.asarray(value, dtype=np.float64),
        n_samples=np.asarray(n_samples, dtype=np.int64),
    )


def tree_rng(seed: int, tree_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(tree_index,))))


def _build_one(X: np.ndarray, y: np.ndarray, params: ForestParams, tree_index: int) -> Tree:
    rng = tree_rng(params.seed, tree_index)
    n = len(y)
    if params.bootstrap:
        rows = np.sort(rng.integers(0, n, size=n))
    else:
        rows = np.arange(n)
    return grow_tree(X, y, rows, params, rng)


_shared: dict[str, Any] = {}


def _init_worker(X: np.ndarray, y: np.ndarray, params: ForestParams) -> None:
    _shared.update(X=X, y=y, params=params)


def _build_shared(tree_index: int) -> Tree:
    return _build_one(_shared["X"], _shared["y"], _shared["params"], tree_index)


def fit_arrays(
    X: np.ndarray,
    y: np.ndarray,
    params: ForestParams,
    column_names: Sequence[str] | None = None,
    n_jobs: int = 1,
) -> ForestModel:
    X = np.ascontiguousarray(X)
    y = np.asarray(y).astype(np.uint8)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("X must be 2-D with one row per label")
    if len(y) < 2:
        raise ValueError("need at least two training rows")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0/1")
    if y.min() == y.max():
        raise ValueError(f"training target has a single class ({int(y[0])})")
    if column_names is None:
        column_names = [f"x{i}" for i in range(X.shape[1])]
    if len(column_names) != X.shape[1]:
        raise ValueError("column_names length does not match X")
    params.resolve_mtry(X.shape[1])

    indices = range(params.n_trees)
    if n_jobs > 1 and params.n_trees > 1:
        ctx = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(n_jobs, mp_context=ctx, initializer=_init_worker, initargs=(X, y, params)) as pool:
            trees = list(pool.map(_build_shared, indices, chunksize=max(1, params.n_trees // (4 * n_jobs))))
    else:
        trees = [_build_one(X, y, params, i) for i in indices]

    model = ForestModel(trees, params, tuple(column_names), np.zeros(X.shape[1]))
    model.importance = feature_importance(model)
    return model


def fit_forest(matrix: FeatureMatrix, params: ForestParams = ForestParams(), n_jobs: int = 1) -> ForestModel:
    model = fit_arrays(matrix.X, matrix.target, params, matrix.column_names, n_jobs=n_jobs)
    model.meta.update(target_region=matrix.target_region, horizon=matrix.horizon)
    return model


def _tree_importance(tree: Tree, n_features: int) -> np.ndarray:
    out = np.zeros(n_features, dtype=np.float64)
    n = tree.n_samples.astype(np.float64)
    ones = np.rint(tree.value * n)
    gini = 1.0 - (ones / n) ** 2 - ((n - ones) / n) ** 2
    split = np.flatnonzero(~tree.is_leaf())
    l, r = tree.left[split], tree.right[split]
    decrease = gini[split] - (n[l] * gini[l] + n[r] * gini[r]) / n[split]
    np.add.at(out, tree.feature[split], decrease * n[split] / n[0])
    return out


def feature_importance(model: ForestModel) -> np.ndarray:
    """Mean decrease in Gini impurity per feature, normalized to sum to 1.

    Each split adds its impurity decrease weighted by the share of the tree's
    rows reaching it; per-tree totals are averaged before normalizing. A forest
    without splits gets all zeros.
    """
    n_features = len(model.column_names)
    total = np.zeros(n_features, dtype=np.float64)
    for tree in model.trees:
        total += _tree_importance(tree, n_features)
    total /= len(model.trees)
    s = total.sum()
    return total / s if s > 0 else total


def predict_proba_batch(model: ForestModel, X: np.ndarray, chunk: int = 16384) -> np.ndarray:
    """Mean leaf class-1 fraction over trees for every row of ``X``.

    Per-row tree outputs are summed in sorted order, so the result does not
    depend on the order of the trees.
    """
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[1] != len(model.column_names):
        raise ValueError(f"expected rows with {len(model.column_names)} features, got shape {X.shape}")
    out = np.empty(len(X), dtype=np.float64)
    for lo in range(0, len(X), chunk):
        part = X[lo : lo + chunk]
        leaves = np.stack([tree.value[tree.apply(part)] for tree in model.trees])
        leaves.sort(axis=0)
        out[lo : lo + chunk] = leaves.sum(axis=0) / len(model.trees)
    return out


def predict_proba(model: ForestModel, row: Sequence[float]) -> float:
    row = np.asarray(row)
    if row.ndim != 1:
        raise ValueError("predict_proba takes a single feature vector")
    return float(predict_proba_batch(model, row[None, :])[0])
