"""Random binary-tree model: samples are tree nodes, quality is path coverage.

A node is stored as ``(depth, bits)`` where ``bits`` holds the left/right
moves from the root, most significant first (L = 0, R = 1).  The integer
``(1 << depth) | bits`` is a heap-style key: the root is 1 and the parent of
key ``v`` is ``v >> 1``, so every ancestor prefix of a path has a unique key.
A node covers itself and every vertex on its root path, ``depth + 1`` in all.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .schedule import ThresholdSchedule, threshold_at, thresholds

# numpy's bounded integer draws top out at 63 bits
_MAX_FAST_DEPTH = 62


class TreeNode(NamedTuple):
    depth: int
    bits: int

    @property
    def key(self) -> int:
        return (1 << self.depth) | self.bits

    @property
    def path(self) -> str:
        if self.depth == 0:
            return ""
        return format(self.bits, f"0{self.depth}b").replace("0", "L").replace("1", "R")

    @property
    def shadow_size(self) -> int:
        return self.depth + 1

    def ancestor(self, level: int) -> "TreeNode":
        if not 0 <= level <= self.depth:
            raise ValueError(f"node at depth {self.depth} has no ancestor at level {level}")
        return TreeNode(level, self.bits >> (self.depth - level))

    @classmethod
    def from_path(cls, path: str) -> "TreeNode":
        path = path.strip().upper()
        if any(ch not in "LR" for ch in path):
            raise ValueError(f"tree paths use only L and R, got {path!r}")
        bits = int(path.replace("L", "0").replace("R", "1"), 2) if path else 0
        return cls(len(path), bits)

    @classmethod
    def from_key(cls, key: int) -> "TreeNode":
        if key < 1:
            raise ValueError("tree keys are positive")
        depth = key.bit_length() - 1
        return cls(depth, key ^ (1 << depth))

    def __str__(self) -> str:
        return self.path


ROOT = TreeNode(0, 0)


def _as_node(x) -> TreeNode:
    if isinstance(x, TreeNode):
        return x
    if isinstance(x, str):
        return TreeNode.from_path(x)
    return TreeNode(*x)


def _random_bits(rng: np.random.Generator, depth: int) -> int:
    if depth <= _MAX_FAST_DEPTH:
        return int(rng.integers(0, 1 << depth)) if depth else 0
    nbytes = (depth + 7) // 8
    return int.from_bytes(rng.bytes(nbytes), "big") >> (8 * nbytes - depth)


def sample_tree_node(p: float, rng: np.random.Generator) -> TreeNode:
    """Random walk from the root, stopping at each node with probability ``p``."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"termination probability must be in (0, 1), got {p}")
    depth = int(rng.geometric(p)) - 1
    return TreeNode(depth, _random_bits(rng, depth))


def sample_tree_nodes(p: float, rng: np.random.Generator, size: int,
                      min_depth: int = 0) -> list[TreeNode]:
    """``size`` independent walks, optionally conditioned on ``depth >= min_depth``.

    Conditioning is exact because the walk's depth is memoryless.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"termination probability must be in (0, 1), got {p}")
    depths = rng.geometric(p, size).astype(np.int64) - 1 + min_depth
    if depths.size and depths.max() <= _MAX_FAST_DEPTH:
        bits = rng.integers(0, np.left_shift(1, depths))
        return list(map(TreeNode, depths.tolist(), bits.tolist()))
    return [TreeNode(d, _random_bits(rng, d)) for d in depths.tolist()]


class CoverageTrie:
    """Prefix tree of covered vertices, keyed by heap-style path keys."""

    def __init__(self, nodes: Iterable = ()):
        self._keys: set[int] = set()
        for x in nodes:
            self.insert(x)

    def insert(self, node) -> int:
        """Add a node's root path; returns how many new vertices it covered."""
        key = _as_node(node).key
        added = 0
        keys = self._keys
        while key and key not in keys:
            keys.add(key)
            key >>= 1
            added += 1
        return added

    def __contains__(self, node) -> bool:
        return _as_node(node).key in self._keys

    def __len__(self) -> int:
        return len(self._keys)

    @property
    def count(self) -> int:
        return len(self._keys)


def coverage(nodes: Iterable) -> int:
    return CoverageTrie(nodes).count


@dataclass
class TreeTrace:
    selected: list[TreeNode]
    rejected: list[TreeNode]
    seen_total: int
    wait_times: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.selected)

    def head(self, n: int) -> "TreeTrace":
        w = self.wait_times[:n]
        return TreeTrace(self.selected[:n], self.rejected[: int(np.sum(w - 1))], int(w.sum()), w)


def run_tree_selection(s: ThresholdSchedule, p: float, n: int,
                       rng: np.random.Generator, chunk: int = 1024) -> TreeTrace:
    """Stream random nodes; node x becomes the i-th selection iff depth(x)+1 >= c_i."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not s.is_integer:
        raise ValueError("tree selection needs an integer-valued schedule")
    c = thresholds(s, n).tolist()
    selected: list[TreeNode] = []
    rejected: list[TreeNode] = []
    waits: list[int] = []
    wait = 0
    need = c[0]
    while len(selected) < n:
        for node in sample_tree_nodes(p, rng, chunk):
            wait += 1
            if node.depth + 1 >= need:
                selected.append(node)
                waits.append(wait)
                wait = 0
                if len(selected) == n:
                    break
                need = c[len(selected)]
            else:
                rejected.append(node)
    w = np.array(waits, dtype=np.int64)
    return TreeTrace(selected, rejected, int(w.sum()), w)


def chain_lengths(candidates: Iterable) -> list[int]:
    """Lengths of the long-path decomposition of the candidates' trie.

    Candidates are visited deepest first; each claims the still-unclaimed
    vertices on its root path, which is exactly the chain ending at it when
    every trie vertex joins the chain of its deepest child.  Candidates whose
    whole path is already claimed get length 0.
    """
    keys = sorted((_as_node(x) for x in candidates), key=lambda t: -t.depth)
    claimed: set[int] = set()
    out = []
    for node in keys:
        key = node.key
        length = 0
        while key and key not in claimed:
            claimed.add(key)
            key >>= 1
            length += 1
        out.append(length)
    return out


def offline_optimal_coverage(candidates: Sequence, n: int) -> int:
    """Maximum coverage of any ``n`` of the candidates, exact."""
    if n < 1 or len(candidates) < n:
        raise ValueError(f"need at least n={n} candidates, got {len(candidates)}")
    return sum(heapq.nlargest(n, chain_lengths(candidates)))


def brute_force_optimal_coverage(candidates: Sequence, n: int, limit: int = 16) -> int:
    if len(candidates) > limit:
        raise ValueError(f"{len(candidates)} candidates exceeds the brute-force limit of "
                         f"{limit}; use offline_optimal_coverage")
    if n < 1 or len(candidates) < n:
        raise ValueError(f"need at least n={n} candidates, got {len(candidates)}")
    nodes = [_as_node(x) for x in candidates]
    return max(coverage(sub) for sub in itertools.combinations(nodes, n))


def independence_diagnostic(selected: Sequence, level: int) -> int:
    """Number of distinct level-``level`` vertices on the nodes' root paths."""
    seen = set()
    for x in selected:
        node = _as_node(x)
        if node.depth < level:
            raise ValueError(f"node {node.path!r} is shallower than level {level}")
        seen.add(node.bits >> (node.depth - level))
    return len(seen)


def _f(s: ThresholdSchedule, i: int) -> float:
    return threshold_at(s, i) - math.log2(i)


_BINS = 1.0 - 2.0 / math.e


def fast_growth_ratio_constant(s: ThresholdSchedule, n: int) -> float:
    """Bound on E[Cover*/Cover] for schedules with c_i >= log2 i."""
    return 1.5 + 2.0 * (2.0 + _f(s, n)) / (_BINS * _f(s, n // 2))


def fast_growth_expectation_constant(s: ThresholdSchedule, n: int) -> float:
    """Bound on E[Cover*]/E[Cover] for schedules with c_i >= log2 i."""
    return 1.0 + (2.0 + _f(s, n)) / (0.25 * _BINS * _f(s, n // 2))


def slow_growth_ratio_constant(s: ThresholdSchedule, n: int) -> float:
    """Bound on E[Cover*/Cover] for schedules with c_i <= c_{i/2} + O(1)."""
    return 1.5 + 2.0 ** (threshold_at(s, n) + 1 - threshold_at(s, n // 2)) / _BINS


def slow_growth_expectation_constant(s: ThresholdSchedule, n: int) -> float:
    return 1.0 + 2.0 ** (threshold_at(s, n) + 2 - threshold_at(s, n // 2)) / _BINS


def is_fast_growing(s: ThresholdSchedule, n: int) -> bool:
    """True iff c_i > log2 i for every i <= n (f must stay positive)."""
    return all(threshold_at(s, i) > math.log2(i) for i in range(1, n + 1))


def proof_constants(s: ThresholdSchedule, n: int) -> tuple[float, float]:
    """(ratio constant, expectation constant) from whichever growth case applies."""
    if is_fast_growing(s, n):
        return fast_growth_ratio_constant(s, n), fast_growth_expectation_constant(s, n)
    return slow_growth_ratio_constant(s, n), slow_growth_expectation_constant(s, n)
