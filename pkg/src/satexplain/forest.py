"""Random-forest surrogate: CART-style training, voting, fidelity.

Trees are grown greedily by Gini impurity reduction on bootstrap resamples,
with a uniform random subset of ceil(sqrt(n)) candidate features per split.
The forest predicts 1 when at least ``threshold`` trees vote 1; the default
threshold is a strict majority, floor(m/2) + 1.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from typing import Union

import numpy as np

from .core import Instance, Label
from .vicinity import LabeledDataset

_GAIN_EPS = 1e-12


@dataclass(frozen=True)
class Leaf:
    label: Label


@dataclass(frozen=True)
class Node:
    feature: int
    low: "TreeNode"  # taken when the feature is 0
    high: "TreeNode"  # taken when the feature is 1


TreeNode = Union[Leaf, Node]


@dataclass(frozen=True)
class DecisionTree:
    root: TreeNode
    n_features: int

    def depth(self) -> int:
        def walk(node: TreeNode) -> int:
            if isinstance(node, Leaf):
                return 0
            return 1 + max(walk(node.low), walk(node.high))

        return walk(self.root)

    def paths(self) -> list[tuple[list[tuple[int, int]], Label]]:
        """All root-to-leaf paths as ([(feature, value), ...], leaf label)."""
        out: list[tuple[list[tuple[int, int]], Label]] = []

        def walk(node: TreeNode, prefix: list[tuple[int, int]]):
            if isinstance(node, Leaf):
                out.append((list(prefix), node.label))
                return
            walk(node.low, prefix + [(node.feature, 0)])
            walk(node.high, prefix + [(node.feature, 1)])

        walk(self.root, [])
        return out


@dataclass(frozen=True)
class RandomForest:
    trees: tuple[DecisionTree, ...]
    threshold: int
    n_features: int

    def __post_init__(self):
        m = len(self.trees)
        if not 1 <= self.threshold <= m:
            raise ValueError(f"threshold {self.threshold} outside 1..{m}")
        if any(t.n_features != self.n_features for t in self.trees):
            raise ValueError("trees disagree on feature count")


def predict_tree(tree: DecisionTree, x: Instance) -> Label:
    node = tree.root
    while isinstance(node, Node):
        node = node.high if x.values[node.feature] else node.low
    return node.label


def predict_forest(forest: RandomForest, x: Instance) -> Label:
    votes = sum(predict_tree(t, x) for t in forest.trees)
    return 1 if votes >= forest.threshold else 0


def _majority(y: np.ndarray) -> Label:
    ones = int(y.sum())
    return 1 if ones > len(y) - ones else 0  # ties go to 0


def _grow(
    X: np.ndarray,
    y: np.ndarray,
    idx: np.ndarray,
    depth_left: int,
    used: frozenset[int],
    rng: random.Random,
    k_candidates: int,
) -> TreeNode:
    sub_y = y[idx]
    ones = int(sub_y.sum())
    total = len(idx)
    if ones == 0:
        return Leaf(0)
    if ones == total:
        return Leaf(1)
    available = [f for f in range(X.shape[1]) if f not in used]
    if depth_left == 0 or not available:
        return Leaf(_majority(sub_y))

    def gini_term(n1, n):
        n = np.asarray(n, dtype=np.float64)
        with np.errstate(divide="ignore", invalid="ignore"):
            p1 = np.where(n > 0, n1 / n, 0.0)
        return n * (1.0 - p1 * p1 - (1.0 - p1) * (1.0 - p1))

    p1_parent = ones / total
    parent = total * (1.0 - p1_parent * p1_parent - (1 - p1_parent) * (1 - p1_parent))

    def best_split(cand: list[int]) -> tuple[float, int]:
        sub_X = X[np.ix_(idx, cand)]
        n_right = sub_X.sum(axis=0, dtype=np.int64)
        n1_right = (sub_X * sub_y[:, None]).sum(axis=0, dtype=np.int64)
        gains = parent - gini_term(ones - n1_right, total - n_right) - gini_term(
            n1_right, n_right
        )
        b = int(np.argmax(gains))  # ties resolved to the lowest feature index
        return float(gains[b]), cand[b]

    # Random subset first; like mainstream forests, keep scanning the rest of
    # the features when the subset offers no improving split.
    shuffled = rng.sample(available, len(available))
    gain, feature = best_split(sorted(shuffled[:k_candidates]))
    if gain <= _GAIN_EPS and len(shuffled) > k_candidates:
        gain, feature = best_split(sorted(shuffled[k_candidates:]))
    if gain <= _GAIN_EPS:
        return Leaf(_majority(sub_y))
    mask = X[idx, feature] == 1
    left_idx = idx[~mask]
    right_idx = idx[mask]
    used2 = used | {feature}
    return Node(
        feature,
        _grow(X, y, left_idx, depth_left - 1, used2, rng, k_candidates),
        _grow(X, y, right_idx, depth_left - 1, used2, rng, k_candidates),
    )


def _to_arrays(data: LabeledDataset) -> tuple[np.ndarray, np.ndarray]:
    X = np.array([x.values for x, _ in data.rows], dtype=np.int8)
    y = np.array([lab for _, lab in data.rows], dtype=np.int8)
    return X, y


def train_tree(data: LabeledDataset, max_depth: int, rng: random.Random) -> DecisionTree:
    if not data.rows:
        raise ValueError("cannot train on an empty dataset")
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    X, y = _to_arrays(data)
    k = math.ceil(math.sqrt(data.n_features))
    root = _grow(X, y, np.arange(len(y)), max_depth, frozenset(), rng, k)
    return DecisionTree(root, data.n_features)


def train_forest(
    data: LabeledDataset,
    nb_trees: int,
    max_depth: int,
    seed: int,
    threshold: int | None = None,
) -> RandomForest:
    """Train ``nb_trees`` trees on bootstrap resamples of the dataset."""
    if nb_trees < 1:
        raise ValueError("nb_trees must be >= 1")
    X, y = _to_arrays(data)
    k = math.ceil(math.sqrt(data.n_features))
    master = random.Random(seed)
    tree_seeds = [master.randrange(2**63) for _ in range(nb_trees)]
    trees = []
    n_rows = len(y)
    for ts in tree_seeds:
        rng = random.Random(ts)
        boot = np.array([rng.randrange(n_rows) for _ in range(n_rows)])
        root = _grow(X, y, boot, max_depth, frozenset(), rng, k)
        trees.append(DecisionTree(root, data.n_features))
    t = threshold if threshold is not None else nb_trees // 2 + 1
    return RandomForest(tuple(trees), t, data.n_features)


def fidelity(
    forest: RandomForest, data: LabeledDataset, oracle=None
) -> float:
    """Fraction of rows where the forest agrees with the stored labels.

    Pass ``oracle`` to re-query labels instead of trusting the stored ones.
    """
    if not data.rows:
        return 1.0
    agree = 0
    for x, label in data.rows:
        if oracle is not None:
            label = oracle.predict(x)
        if predict_forest(forest, x) == label:
            agree += 1
    return agree / len(data.rows)


# ---------------------------------------------------------------------------
# JSON serialization (documented in docs/formats.md)


def _node_to_obj(node: TreeNode):
    if isinstance(node, Leaf):
        return {"label": node.label}
    return {
        "feature": node.feature,
        "low": _node_to_obj(node.low),
        "high": _node_to_obj(node.high),
    }


def _node_from_obj(obj) -> TreeNode:
    if "label" in obj:
        return Leaf(int(obj["label"]))
    return Node(int(obj["feature"]), _node_from_obj(obj["low"]), _node_from_obj(obj["high"]))


def forest_to_json(forest: RandomForest) -> str:
    doc = {
        "n_features": forest.n_features,
        "threshold": forest.threshold,
        "trees": [_node_to_obj(t.root) for t in forest.trees],
    }
    return json.dumps(doc, indent=2)


def forest_from_json(text: str) -> RandomForest:
    doc = json.loads(text)
    trees = tuple(
        DecisionTree(_node_from_obj(t), int(doc["n_features"])) for t in doc["trees"]
    )
    return RandomForest(trees, int(doc["threshold"]), int(doc["n_features"]))
