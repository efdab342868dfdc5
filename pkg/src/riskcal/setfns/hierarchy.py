"""Label trees, tree distance and subtree prediction sets.

A prediction is a node of the tree, standing for the set of leaves below it.
Ancestor sets are reflexive: a node counts as its own ancestor, so predicting
the true leaf, or any node above it, costs nothing.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class LabelTree:
    """Rooted tree with nodes ``0..V-1``; ``parent[root] == root``.

    ``leaf_of_label[k]`` is the node carrying class ``k``.
    """

    parent: list[int]
    leaf_of_label: list[int]
    names: list[str] = field(default_factory=list)
    depth: list[int] = field(init=False)
    root: int = field(init=False)
    D: int = field(init=False)

    def __post_init__(self):
        parent = [int(p) for p in self.parent]
        v = len(parent)
        if v == 0:
            raise ValueError("empty tree")
        if any(not 0 <= p < v for p in parent):
            raise ValueError("parent ids must be node ids")
        roots = [i for i, p in enumerate(parent) if p == i]
        if len(roots) != 1:
            raise ValueError(f"a tree needs exactly one root, found {len(roots)}")
        self.parent = parent
        self.root = roots[0]
        depth = [-1] * v
        depth[self.root] = 0
        for i in range(v):
            path = []
            node = i
            while depth[node] < 0:
                path.append(node)
                node = parent[node]
                if len(path) > v:
                    raise ValueError("the parent links contain a cycle")
            for d, n in enumerate(reversed(path), start=depth[node] + 1):
                depth[n] = d
        self.depth = depth
        children = set(parent[i] for i in range(v) if i != self.root)
        leaves = [i for i in range(v) if i not in children]
        leaf_of_label = [int(x) for x in self.leaf_of_label]
        if sorted(leaf_of_label) != sorted(leaves):
            raise ValueError("every leaf must carry exactly one label and only leaves carry labels")
        self.leaf_of_label = leaf_of_label
        self.D = max(depth)
        self._label_of_leaf = {n: k for k, n in enumerate(leaf_of_label)}
        self._leaf_labels = self._collect_leaf_labels()

    @property
    def n_labels(self) -> int:
        return len(self.leaf_of_label)

    def ancestors(self, node: int) -> list[int]:
        """``node`` and every node above it, bottom-up."""
        self._check(node)
        out = [node]
        while out[-1] != self.root:
            out.append(self.parent[out[-1]])
        return out

    def leaf_labels(self, node: int) -> frozenset[int]:
        """Class labels of the leaves below ``node``."""
        self._check(node)
        return self._leaf_labels[node]

    def _collect_leaf_labels(self):
        below: list[set[int]] = [set() for _ in self.parent]
        for k, leaf in enumerate(self.leaf_of_label):
            node = leaf
            while True:
                below[node].add(k)
                if node == self.root:
                    break
                node = self.parent[node]
        return [frozenset(s) for s in below]

    def _check(self, node: int) -> None:
        if not 0 <= node < len(self.parent):
            raise ValueError(f"no node {node}")


def load_tree(path) -> LabelTree:
    """Read ``id,parent_id,label_or_dash`` lines; the root is its own parent.

    Node ids must be ``0..V-1``. Labels are class indices ``0..K-1``.
    """
    rows = []
    with open(Path(path), newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec or rec[0].strip().startswith("#"):
                continue
            if len(rec) != 3:
                raise ValueError(f"line {lineno}: expected id,parent_id,label_or_dash")
            try:
                rows.append((int(rec[0]), int(rec[1]), rec[2].strip()))
            except ValueError:
                raise ValueError(f"line {lineno}: node ids must be integers") from None
    ids = sorted(r[0] for r in rows)
    if ids != list(range(len(rows))):
        raise ValueError("node ids must be exactly 0..V-1")
    parent = [0] * len(rows)
    labelled = {}
    for node, par, lab in rows:
        parent[node] = par
        if lab != "-":
            try:
                labelled[int(lab)] = node
            except ValueError:
                raise ValueError(f"node {node}: label must be an integer class index or '-'") from None
    if sorted(labelled) != list(range(len(labelled))):
        raise ValueError("class labels must be exactly 0..K-1")
    return LabelTree(parent, [labelled[k] for k in range(len(labelled))])


def tree_distance(tree: LabelTree, u: int, v: int) -> int:
    """Edges on the path between ``u`` and ``v``."""
    up = tree.ancestors(u)
    on_path = set(up)
    for w in tree.ancestors(v):
        if w in on_path:
            lca = w
            break
    return tree.depth[u] + tree.depth[v] - 2 * tree.depth[lca]


def hierarchical_loss(tree: LabelTree, y: int, s) -> float:
    """``min over s in S, a ancestor-or-self of leaf(y)`` of ``d(a, s) / D``."""
    s = list(s)
    if not s:
        raise ValueError("the prediction set must be non-empty")
    if tree.D < 1:
        raise ValueError("tree depth must be at least 1")
    anc = tree.ancestors(tree.leaf_of_label[y])
    return min(tree_distance(tree, a, node) for a in anc for node in s) / tree.D


def hierarchical_set(tree: LabelTree, probs, lam: float) -> int:
    """Deepest ancestor of the top leaf whose subtree mass is at least ``-lam``."""
    p = np.asarray(probs, dtype=np.float64)
    if p.size == 0:
        raise ValueError("empty probs")
    if p.size != tree.n_labels:
        raise ValueError(f"expected {tree.n_labels} scores, got {p.size}")
    top = tree.leaf_of_label[int(np.argmax(p))]
    for node in tree.ancestors(top):
        if p[list(tree.leaf_labels(node))].sum() >= -lam:
            return node
    return tree.root


def hierarchical_loss_matrix(tree: LabelTree, probs, labels, levels) -> np.ndarray:
    """Loss matrix over ascending mass levels ``q``.

    Column ``j`` predicts ``hierarchical_set(tree, probs_i, -q_j)``. Raising
    the required mass climbs the tree, so sets grow and losses fall left to
    right as the calibration module requires.
    """
    p = np.asarray(probs, dtype=np.float64)
    q = np.asarray(levels, dtype=np.float64)
    if p.ndim != 2 or p.shape[1] != tree.n_labels or len(labels) != p.shape[0]:
        raise ValueError("probs must be n x K (tree classes) with one label per row")
    out = np.empty((p.shape[0], q.size))
    for i, y in enumerate(labels):
        y = int(y)
        if not 0 <= y < tree.n_labels:
            raise ValueError(f"row {i}: label {y} out of range")
        cache: dict[int, float] = {}
        for j, level in enumerate(q):
            node = hierarchical_set(tree, p[i], -level)
            if node not in cache:
                cache[node] = hierarchical_loss(tree, y, [node])
            out[i, j] = cache[node]
    return out
