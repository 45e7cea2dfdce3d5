"""Planar rooted trees, cluster statistics and Catalan convolutions.

Trees are stored as balanced-parentheses words (depth-first contour). The
i-th ``(`` is the i-th edge in the bottom-up, left-to-right edge order, which
is exactly preorder.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator

from .errors import InvalidParameterError, InvariantViolation, ResourceLimitError

ENUMERATION_BUDGET = 12
THREE_QUARTERS = Fraction(3, 4)


def catalan(k: int) -> int:
    if k < 0:
        raise InvalidParameterError("k must be non-negative")
    return math.factorial(2 * k) // (math.factorial(k) * math.factorial(k + 1))


def catalan_recursion_check(k_max: int) -> bool:
    """t_k == sum_l t_{k-1-l} t_l for every 1 <= k <= k_max, with t_0 = 1."""
    if catalan(0) != 1:
        return False
    return all(
        catalan(k) == sum(catalan(k - 1 - l) * catalan(l) for l in range(k))
        for k in range(1, k_max + 1)
    )


@lru_cache(maxsize=None)
def _catalan_power(r: int, s_max: int) -> tuple[int, ...]:
    """Coefficients of x^0..x^s_max in C(x)^r, C the Catalan generating function."""
    base = [catalan(i) for i in range(s_max + 1)]
    poly = [1] + [0] * s_max
    for _ in range(r):
        poly = [sum(poly[j] * base[i - j] for j in range(i + 1)) for i in range(s_max + 1)]
    return tuple(poly)


def forest_count(r: int, s: int) -> int:
    """n_r(s): ordered r-tuples of planar rooted trees with s edges in total."""
    if r < 1:
        raise InvalidParameterError("need at least one root")
    if s < 0:
        return 0
    return _catalan_power(r, s)[s]


def root_degree_convolution(k: int, m: int) -> int:
    """t_k^(m) as the m-fold Catalan convolution over alpha_1 + ... + alpha_m = k - m."""
    if m < 1 or m > k:
        return 0
    return _catalan_power(m, k - m)[k - m]


@dataclass(frozen=True, order=True)
class PlanarRootedTree:
    encoding: str

    def __post_init__(self):
        depth = 0
        for ch in self.encoding:
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            else:
                raise InvariantViolation(f"bad symbol {ch!r}")
            if depth < 0:
                raise InvariantViolation("contour dips below the root")
        if depth:
            raise InvariantViolation("unbalanced encoding")

    @property
    def k(self) -> int:
        return len(self.encoding) // 2

    def parents(self) -> list[int]:
        """Parent of each vertex in preorder; vertex 0 is the root (parent -1).

        Vertex i >= 1 is the upper end of edge i.
        """
        parent = [-1]
        stack = [0]
        for ch in self.encoding:
            if ch == "(":
                parent.append(stack[-1])
                stack.append(len(parent) - 1)
            else:
                stack.pop()
        return parent

    def degrees(self) -> list[int]:
        parent = self.parents()
        deg = [0] * len(parent)
        for v, u in enumerate(parent):
            if u >= 0:
                deg[v] += 1
                deg[u] += 1
        return deg

    def root_degree(self) -> int:
        depth = 0
        count = 0
        for ch in self.encoding:
            if ch == "(":
                count += depth == 0
                depth += 1
            else:
                depth -= 1
        return count

    @classmethod
    def from_parents(cls, parent: list[int]) -> "PlanarRootedTree":
        """Inverse of :meth:`parents` for preorder-numbered parent arrays."""
        children: list[list[int]] = [[] for _ in parent]
        for v, u in enumerate(parent):
            if u >= 0:
                if u >= v:
                    raise InvariantViolation("parent array is not in preorder")
                children[u].append(v)
        out = []

        def walk(v):
            for c in children[v]:
                out.append("(")
                walk(c)
                out.append(")")

        walk(0)
        tree = cls("".join(out))
        if tree.parents() != list(parent):
            raise InvariantViolation("parent array is not in preorder")
        return tree


@dataclass(frozen=True)
class ClusterProfile:
    powers: tuple[int, ...]

    @property
    def max_power(self) -> int:
        return max(self.powers, default=0)

    @property
    def sum(self) -> int:
        return sum(self.powers)

    @property
    def sum_sq(self) -> int:
        return sum(m * m for m in self.powers)


def cluster_profile(tree: PlanarRootedTree) -> ClusterProfile:
    return ClusterProfile(tuple(sorted((d for d in tree.degrees() if d >= 2), reverse=True)))


def _dyck_words(k: int) -> Iterator[str]:
    buf: list[str] = []

    def rec(opened: int, closed: int):
        if closed == k:
            yield "".join(buf)
            return
        if opened < k:
            buf.append("(")
            yield from rec(opened + 1, closed)
            buf.pop()
        if closed < opened:
            buf.append(")")
            yield from rec(opened, closed + 1)
            buf.pop()

    yield from rec(0, 0)


def enumerate_trees(k: int, budget: int = ENUMERATION_BUDGET) -> Iterator[PlanarRootedTree]:
    """Every tree with k edges once, in lexicographic order of encodings."""
    if k < 0:
        raise InvalidParameterError("k must be non-negative")
    if k > budget:
        raise ResourceLimitError(f"k={k} is over the enumeration budget {budget}")
    for word in _dyck_words(k):
        yield PlanarRootedTree(word)


@lru_cache(maxsize=16)
def _profiles(k: int) -> tuple[ClusterProfile, ...]:
    return tuple(cluster_profile(t) for t in enumerate_trees(k))


def root_edge_counts(k: int) -> dict[int, int]:
    """m -> t_k^(m), by census over all trees, cross-checked against the convolution."""
    census = Counter(t.root_degree() for t in enumerate_trees(k))
    table = {m: census.get(m, 0) for m in range(1, k + 1)}
    for m, count in table.items():
        if count != root_degree_convolution(k, m):
            raise InvariantViolation(f"t_{k}^({m}): census {count} != convolution {root_degree_convolution(k, m)}")
    return table


def root_degree_bound_check(k_max: int) -> list[tuple[int, int, str]]:
    """Violations of t_k^(m) <= t_{k-1} (3/4)^(m-2) and of t_k^(m) <= t_{k-1}."""
    bad = []
    for k in range(2, k_max + 1):
        for m in range(2, k + 1):
            t_km = root_degree_convolution(k, m)
            if t_km > catalan(k - 1) * THREE_QUARTERS ** (m - 2):
                bad.append((k, m, "geometric"))
            if t_km > catalan(k - 1):
                bad.append((k, m, "simple"))
    return bad


@dataclass(frozen=True)
class ForestChainRow:
    r: int
    l: int
    s: int
    left: int
    middle: Fraction
    right: Fraction

    @property
    def left_ok(self) -> bool:
        return self.left <= self.middle

    @property
    def outer_ok(self) -> bool:
        return self.left <= self.right

    @property
    def middle_ok(self) -> bool:
        return self.middle <= self.right


def forest_chain_table(max_roots: int = 8, s_max: int = 8) -> list[ForestChainRow]:
    """n_{r+l}(s-l) vs n_{r+1}(s-1)(3/4)^(l-2) vs n_r(s)(3/4)^(l-1) for 2 <= l <= s, r + l <= max_roots."""
    rows = []
    for r in range(1, max_roots):
        for l in range(2, max_roots - r + 1):
            for s in range(l, s_max + 1):
                rows.append(ForestChainRow(
                    r, l, s,
                    forest_count(r + l, s - l),
                    forest_count(r + 1, s - 1) * THREE_QUARTERS ** (l - 2),
                    forest_count(r, s) * THREE_QUARTERS ** (l - 1),
                ))
    return rows


@dataclass(frozen=True)
class MaxClusterCensus:
    """Tree counts for k edges by cluster power.

    ``exact[m]``: trees whose maximal cluster power is m.
    ``at_least[m]``: trees with some cluster of power >= m.
    ``has_power[m]``: trees with some cluster of power exactly m.
    """

    k: int
    exact: dict[int, int]
    at_least: dict[int, int]
    has_power: dict[int, int]

    def bound(self, m: int) -> Fraction:
        return self.k * catalan(self.k) * THREE_QUARTERS ** (m - 2)

    def violations(self) -> list[tuple[int, str]]:
        bad = []
        for m in range(2, self.k + 1):
            b = self.bound(m)
            for name, table in (("exact", self.exact), ("at_least", self.at_least), ("has_power", self.has_power)):
                if table.get(m, 0) > b:
                    bad.append((m, name))
        return bad


def max_cluster_census(k: int) -> MaxClusterCensus:
    profiles = _profiles(k)
    exact = Counter(pr.max_power for pr in profiles)
    has = Counter(m for pr in profiles for m in set(pr.powers))
    top = max(exact, default=0)
    at_least = {m: sum(c for mm, c in exact.items() if mm >= m) for m in range(2, top + 1)}
    if sum(exact.values()) != catalan(k):
        raise InvariantViolation("census does not cover T_k")
    return MaxClusterCensus(k, dict(sorted(exact.items())), at_least, dict(sorted(has.items())))


def max_cluster_bound_check(k_max: int) -> list[tuple[int, int, str]]:
    return [(k, m, name) for k in range(1, k_max + 1) for m, name in max_cluster_census(k).violations()]


def sum_sq_power_totals(k: int, s_max: int) -> list[int]:
    """sum over T_k of (sum_i m_i^2)^s, for s = 0..s_max."""
    out = [0] * (s_max + 1)
    for pr in _profiles(k):
        q = pr.sum_sq
        val = 1
        for s in range(s_max + 1):
            out[s] += val
            val *= q
    return out


def sum_sq_cluster_total(k: int) -> int:
    return sum_sq_power_totals(k, 1)[1]
