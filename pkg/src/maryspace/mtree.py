"""m-ary search trees under the random permutation model.

A node holds up to m-1 keys in increasing order.  It grows no children
until its (m-1)-th key arrives; at that moment it sprouts m empty children
(external nodes).  The space requirement counts every node, empty or not,
so the empty tree has space requirement 1 and in general
``X = 1 + m * (number of full nodes)``.
"""

from __future__ import annotations

import bisect
import itertools
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Optional

import numpy as np
from numba import njit

from maryspace import rng as _rng
from maryspace.errors import DomainError, DuplicateKey, TooLarge

ENUMERATION_MAX_N = 10


@dataclass
class Node:
    keys: list[int]
    # None while the node has fewer than m-1 keys; afterwards m slots,
    # each None (an empty external node) or a Node.
    children: Optional[list[Optional["Node"]]] = None


@dataclass
class SearchTree:
    m: int
    root: Optional[Node] = None
    n: int = 0
    full_nodes: int = 0
    nonempty_nodes: int = 0

    def __post_init__(self) -> None:
        if self.m < 2:
            raise DomainError(f"branching factor must be >= 2, got {self.m}")

    @property
    def node_count_total(self) -> int:
        return 1 + self.m * self.full_nodes

    @property
    def node_count_nonempty(self) -> int:
        return self.nonempty_nodes

    def insert(self, key: int) -> None:
        cap = self.m - 1
        if self.root is None:
            self.root = self._new_node(key)
            return
        node = self.root
        while True:
            pos = bisect.bisect_left(node.keys, key)
            if pos < len(node.keys) and node.keys[pos] == key:
                raise DuplicateKey(f"key {key} already present")
            if node.children is None:
                node.keys.insert(pos, key)
                self.n += 1
                if len(node.keys) == cap:
                    self._fill(node)
                return
            nxt = node.children[pos]
            if nxt is None:
                node.children[pos] = self._new_node(key)
                return
            node = nxt

    def _new_node(self, key: int) -> Node:
        node = Node([key])
        self.n += 1
        self.nonempty_nodes += 1
        if self.m == 2:
            self._fill(node)
        return node

    def _fill(self, node: Node) -> None:
        node.children = [None] * self.m
        self.full_nodes += 1

    def nodes(self) -> Iterator[tuple[Optional[Node], int]]:
        """Preorder walk yielding ``(node, depth)``; empty slots yield ``None``."""
        stack: list[tuple[Optional[Node], int]] = [(self.root, 0)]
        while stack:
            node, depth = stack.pop()
            yield node, depth
            if node is not None and node.children is not None:
                stack.extend((c, depth + 1) for c in reversed(node.children))

    def in_order(self) -> list[int]:
        out: list[int] = []

        def walk(node: Optional[Node]) -> None:
            if node is None:
                return
            if node.children is None:
                out.extend(node.keys)
                return
            for i, c in enumerate(node.children):
                walk(c)
                if i < len(node.keys):
                    out.append(node.keys[i])

        walk(self.root)
        return out

    def check(self) -> None:
        """Recount nodes by traversal and verify every structural invariant."""
        total = nonempty = full = 0
        cap = self.m - 1
        stack: list[tuple[Optional[Node], float, float]] = [(self.root, -math.inf, math.inf)]
        while stack:
            node, lo, hi = stack.pop()
            total += 1
            if node is None:
                continue
            nonempty += 1
            k = node.keys
            assert 1 <= len(k) <= cap, "key count out of range"
            assert all(a < b for a, b in zip(k, k[1:])), "keys not increasing"
            assert all(lo < x < hi for x in k), "key outside its subtree interval"
            if node.children is None:
                assert len(k) < cap, "full node without children"
                continue
            assert len(k) == cap and len(node.children) == self.m
            full += 1
            bounds = [lo, *k, hi]
            for i, c in enumerate(node.children):
                stack.append((c, bounds[i], bounds[i + 1]))
        assert total == self.node_count_total, "space requirement bookkeeping drifted"
        assert nonempty == self.nonempty_nodes and full == self.full_nodes
        empty = self.m * full - (nonempty - 1) if self.root is not None else 1
        assert total == nonempty + empty

    def dump(self) -> str:
        """One line per node: indentation by depth, keys, or ``o`` for empty."""
        lines = []
        for node, depth in self.nodes():
            label = "o" if node is None else " ".join(map(str, node.keys))
            lines.append(f"{'  ' * depth}{label}")
        return "\n".join(lines)


def build_tree(m: int, seq: Iterable[int]) -> SearchTree:
    """Insert ``seq`` left to right into an empty m-ary search tree."""
    tree = SearchTree(m)
    for key in seq:
        tree.insert(key)
    return tree


def space_requirement(tree: SearchTree) -> int:
    return tree.node_count_total


def space_of_sequence(m: int, seq: Iterable[int]) -> int:
    return build_tree(m, seq).node_count_total


def sample_X(m: int, n: int, seed: _rng.SeedLike = None, method: str = "split") -> int:
    """One draw of X_n under the random permutation model.

    ``method="tree"`` inserts a uniformly random permutation of [n];
    ``method="split"`` runs the subtree-size recursion (same law, much faster).
    """
    return int(sample_X_many(m, n, 1, seed, method=method)[0])


def sample_X_many(
    m: int,
    n: int,
    size: int,
    seed: _rng.SeedLike = None,
    method: str = "split",
    threads: int = 1,
) -> np.ndarray:
    """``size`` independent draws of X_n; deterministic in ``(m, n, size, seed)``."""
    if m < 2:
        raise DomainError(f"branching factor must be >= 2, got {m}")
    if n < 0:
        raise DomainError(f"n must be nonnegative, got {n}")
    if method == "split":

        def work(gen: np.random.Generator, lo: int, hi: int) -> np.ndarray:
            return _split_kernel(gen, m, n, hi - lo)

    elif method == "tree":

        def work(gen: np.random.Generator, lo: int, hi: int) -> np.ndarray:
            out = np.empty(hi - lo, dtype=np.int64)
            for i in range(hi - lo):
                out[i] = space_of_sequence(m, (gen.permutation(n) + 1).tolist())
            return out

    else:
        raise DomainError(f"unknown sampling method {method!r}")
    parts = _rng.run_blocks(work, size, seed, threads=threads)
    return np.concatenate(parts).astype(np.int64) if parts else np.empty(0, dtype=np.int64)


@njit(nogil=True, cache=True)
def _composition_into(gen, n_prime, m, out, bars):
    """Uniform composition of n_prime into m parts (stars and bars) written to ``out``."""
    total = n_prime + m - 1
    need = m - 1
    if total <= 2 * need * need:
        # selection sampling over all positions
        k = 0
        for i in range(total):
            if gen.random() * (total - i) < need - k:
                bars[k] = i
                k += 1
                if k == need:
                    break
    else:
        while True:
            for k in range(need):
                bars[k] = gen.integers(0, total)
            bars[:need].sort()
            ok = True
            for k in range(1, need):
                if bars[k] == bars[k - 1]:
                    ok = False
                    break
            if ok:
                break
    prev = -1
    for k in range(need):
        out[k] = bars[k] - prev - 1
        prev = bars[k]
    out[m - 1] = total - 1 - prev


@njit(nogil=True, cache=True)
def _split_one(gen, m, n, stack, parts, bars):
    if n <= m - 2:
        return 1
    count = 0
    top = 0
    stack[0] = n
    top = 1
    while top > 0:
        top -= 1
        s = stack[top]
        count += 1
        _composition_into(gen, s - (m - 1), m, parts, bars)
        for k in range(m):
            j = parts[k]
            if j <= m - 2:
                count += 1
            else:
                stack[top] = j
                top += 1
    return count


@njit(nogil=True, cache=True)
def _split_kernel(gen, m, n, size):
    out = np.empty(size, dtype=np.int64)
    # each pop pushes at most m entries and sizes shrink by >= m-1 per level
    depth = n // max(m - 1, 1) + 2
    stack = np.empty(depth * m + m, dtype=np.int64)
    parts = np.empty(m, dtype=np.int64)
    bars = np.empty(m, dtype=np.int64)
    for i in range(size):
        out[i] = _split_one(gen, m, n, stack, parts, bars)
    return out


def exact_distribution(m: int, n: int) -> dict[int, Fraction]:
    """Exact law of X_n by building the tree for every permutation of [n]."""
    if m < 2:
        raise DomainError(f"branching factor must be >= 2, got {m}")
    if n > ENUMERATION_MAX_N:
        raise TooLarge(f"n = {n} > {ENUMERATION_MAX_N}: {n}! permutations is too many")
    if n < 0:
        raise DomainError(f"n must be nonnegative, got {n}")
    return dict(_exact_distribution(m, n))


@lru_cache(maxsize=None)
def _exact_distribution(m: int, n: int) -> tuple[tuple[int, Fraction], ...]:
    counts = Counter(space_of_sequence(m, p) for p in itertools.permutations(range(1, n + 1)))
    total = math.factorial(n)
    return tuple(sorted((x, Fraction(c, total)) for x, c in counts.items()))


def pmf_mean(pmf: dict[int, Fraction]) -> Fraction:
    return sum((x * p for x, p in pmf.items()), Fraction(0))
