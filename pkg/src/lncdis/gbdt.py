"""Second-order gradient-boosted decision trees for binary classification.

Trees are grown depth-first with exact greedy split finding on the
quadratic expansion of the logistic loss; leaf weights are -G / (H + lambda).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import expit, logit

from . import _kernels

P_CLAMP = 1e-12


@dataclass(frozen=True)
class GbdtConfig:
    num_trees: int = 500
    max_depth: int = 15
    learning_rate: float = 0.3
    reg_lambda: float = 1.0
    min_split_gain: float = 0.0
    min_child_hessian: float = 1.0
    base_score: float = 0.5
    seed: int = 0
    subsample: float = 1.0
    colsample: float = 1.0

    def __post_init__(self):
        if self.num_trees < 0:
            raise ValueError("num_trees must be >= 0")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not 0 < self.learning_rate <= 1:
            raise ValueError("learning_rate must lie in (0, 1]")
        if self.reg_lambda < 0:
            raise ValueError("reg_lambda must be >= 0")
        if not 0 < self.base_score < 1:
            raise ValueError("base_score must lie in (0, 1)")
        if not (0 < self.subsample <= 1 and 0 < self.colsample <= 1):
            raise ValueError("subsample and colsample must lie in (0, 1]")


@dataclass
class TreeNode:
    """Leaf when ``feature`` is None; samples with x[feature] <= threshold go left."""

    weight: float = 0.0
    feature: int | None = None
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(self.left.depth(), self.right.depth())

    def n_leaves(self) -> int:
        return 1 if self.is_leaf else self.left.n_leaves() + self.right.n_leaves()

    def preorder(self):
        yield self
        if not self.is_leaf:
            yield from self.left.preorder()
            yield from self.right.preorder()


@dataclass
class FlatTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @classmethod
    def from_node(cls, root: TreeNode) -> "FlatTree":
        nodes = list(root.preorder())
        pos = {id(n): i for i, n in enumerate(nodes)}
        feature = np.array([-1 if n.is_leaf else n.feature for n in nodes], dtype=np.int64)
        threshold = np.array([n.threshold for n in nodes], dtype=np.float64)
        left = np.array([-1 if n.is_leaf else pos[id(n.left)] for n in nodes], dtype=np.int64)
        right = np.array([-1 if n.is_leaf else pos[id(n.right)] for n in nodes], dtype=np.int64)
        value = np.array([n.weight for n in nodes], dtype=np.float64)
        return cls(feature, threshold, left, right, value)

    def predict(self, X: np.ndarray, backend=None) -> np.ndarray:
        k = backend or _kernels.backend
        return k.predict_tree(self.feature, self.threshold, self.left, self.right, self.value, X)


@dataclass
class BoostedEnsemble:
    trees: list[TreeNode]
    config: GbdtConfig
    n_features: int
    loss_trace: list[float] = field(default_factory=list)

    @cached_property
    def _flat(self) -> list[FlatTree]:
        return [FlatTree.from_node(t) for t in self.trees]

    def raw_score(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got shape {X.shape}")
        raw = np.full(len(X), logit(self.config.base_score))
        for tree in self._flat:
            raw += self.config.learning_rate * tree.predict(X)
        return raw


def grad_hess(p, y):
    """Gradient and Hessian of the logistic loss with respect to the raw score."""
    p = np.clip(np.asarray(p, dtype=np.float64), P_CLAMP, 1.0 - P_CLAMP)
    y = np.asarray(y, dtype=np.float64)
    g = p - y
    h = p * (1.0 - p)
    if g.ndim == 0:
        return float(g), float(h)
    return g, h


def presort(X: np.ndarray, samples=None) -> np.ndarray:
    """Per-feature orderings of ``samples`` (all rows by default), ties kept in index order."""
    idx = np.arange(len(X), dtype=np.int64) if samples is None else np.sort(np.asarray(samples, dtype=np.int64))
    order = np.argsort(X[idx], axis=0, kind="stable")
    return np.ascontiguousarray(idx[order].T)


def best_split(X, g, h, node_samples, config: GbdtConfig, backend=None):
    """Best ``(feature, threshold, gain)`` for the node, or None."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if len(node_samples) == 0:
        raise ValueError("node has no samples")
    k = backend or _kernels.backend
    f, thr, gain = k.best_split(
        X,
        np.ascontiguousarray(g, dtype=np.float64),
        np.ascontiguousarray(h, dtype=np.float64),
        presort(X, node_samples),
        config.reg_lambda,
        config.min_split_gain,
        config.min_child_hessian,
    )
    return None if f < 0 else (int(f), float(thr), float(gain))


def leaf_weight(G: float, H: float, reg_lambda: float) -> float:
    return -G / (H + reg_lambda)


def build_tree(
    X, g, h, config: GbdtConfig, samples=None, features=None, backend=None, presorted=None
) -> TreeNode:
    """Grow one tree depth-first.

    ``presorted`` may carry ``presort(X)`` computed once for all rounds.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    g = np.ascontiguousarray(g, dtype=np.float64)
    h = np.ascontiguousarray(h, dtype=np.float64)
    k = backend or _kernels.backend
    cols = np.arange(X.shape[1]) if features is None else np.asarray(features, dtype=np.int64)
    Xc = np.ascontiguousarray(X[:, cols])
    if presorted is None:
        sorted_idx = presort(Xc, samples)
    else:
        sorted_idx = np.ascontiguousarray(presorted[cols])
        if samples is not None:
            keep = np.zeros(len(X), dtype=np.uint8)
            keep[samples] = 1
            sorted_idx = k.partition(sorted_idx, keep)[0]
    if sorted_idx.shape[1] == 0:
        raise ValueError("cannot grow a tree on zero samples")
    goes_left = np.zeros(len(X), dtype=np.uint8)

    def grow(order, depth):
        members = order[0]
        node = TreeNode(weight=leaf_weight(float(np.sum(g[members])), float(np.sum(h[members])), config.reg_lambda))
        if depth >= config.max_depth or len(members) < 2:
            return node
        f, thr, _ = k.best_split(
            Xc, g, h, order, config.reg_lambda, config.min_split_gain, config.min_child_hessian
        )
        if f < 0:
            return node
        goes_left[members] = Xc[members, f] <= thr
        left, right = k.partition(order, goes_left)
        node.feature, node.threshold = int(cols[f]), float(thr)
        node.left = grow(left, depth + 1)
        node.right = grow(right, depth + 1)
        return node

    return grow(sorted_idx, 0)


def logloss(p, y) -> float:
    p = np.clip(p, P_CLAMP, 1.0 - P_CLAMP)
    return float(np.mean(-(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))))


def train(features, labels, config: GbdtConfig = GbdtConfig(), backend=None) -> BoostedEnsemble:
    """Boost ``config.num_trees`` rounds; ``loss_trace[t]`` is the logloss after t trees."""
    X = np.ascontiguousarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64).reshape(-1)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("features must be (samples, features) aligned with labels")
    if not (np.any(y == 1) and np.any(y == 0)):
        raise ValueError("both classes must be present")
    rng = np.random.default_rng(config.seed)
    raw = np.full(len(y), logit(config.base_score))
    trees: list[TreeNode] = []
    trace = [logloss(expit(raw), y)]
    presorted = presort(X)
    for _ in range(config.num_trees):
        g, h = grad_hess(expit(raw), y)
        samples = None
        if config.subsample < 1:
            samples = rng.choice(len(y), size=max(1, int(round(config.subsample * len(y)))), replace=False)
        cols = None
        if config.colsample < 1:
            cols = np.sort(rng.choice(X.shape[1], size=max(1, int(round(config.colsample * X.shape[1]))), replace=False))
        tree = build_tree(X, g, h, config, samples=samples, features=cols, backend=backend, presorted=presorted)
        trees.append(tree)
        raw += config.learning_rate * FlatTree.from_node(tree).predict(X, backend)
        trace.append(logloss(expit(raw), y))
    return BoostedEnsemble(trees, config, X.shape[1], trace)


def predict_proba(ensemble: BoostedEnsemble, features) -> np.ndarray:
    return expit(ensemble.raw_score(features))
