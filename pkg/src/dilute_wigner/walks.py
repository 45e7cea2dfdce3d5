"""Even closed walks, their tree encoding, and exact finite-(N, p) moments.

A closed walk of length 2k on labels ``v_0 = 0, v_1, ..., v_{2k-1}`` is
*even* when every unordered step {v_i, v_{i+1}} (self-steps included) is
taken an even number of times. Walks with the same pattern of label
coincidences form a class; the class is stored in first-occurrence canonical
form (each new label is the smallest unused integer).

The expected value of (1/N) Tr A^{2k} is a sum over classes of

    (1/N) * N (N-1) ... (N-v+1) * prod_j V_{2 xi_j} / (N p^{xi_j - 1})

where v is the number of distinct labels and xi_j is half the number of
traversals of the j-th distinct cell. All arithmetic here is exact
(:class:`fractions.Fraction`), so summation order never matters.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterator

import networkx as nx

from .ensemble import EntryDistribution
from .errors import InvalidParameterError, InvariantViolation, ResourceLimitError, UnsupportedClassError
from .trees import PlanarRootedTree

CLASS_BUDGET = 6
BRUTE_FORCE_BUDGET = 10**7

Pair = tuple[int, int]


def _pair(a: int, b: int) -> Pair:
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class EvenWalkClass:
    labels: tuple[int, ...]

    def __post_init__(self):
        seen = -1
        for lab in self.labels:
            if lab > seen + 1:
                raise InvariantViolation(f"labels {self.labels} are not in canonical form")
            seen = max(seen, lab)
        if not self.labels or self.labels[0] != 0 or len(self.labels) % 2:
            raise InvariantViolation("need an even-length walk starting at label 0")
        if any(c % 2 for c in self.step_multiset.values()):
            raise InvariantViolation(f"walk {self.labels} is not even")

    @property
    def k(self) -> int:
        return len(self.labels) // 2

    @property
    def v(self) -> int:
        return max(self.labels) + 1

    def steps(self) -> list[tuple[int, int]]:
        lab = self.labels
        return [(lab[i], lab[(i + 1) % len(lab)]) for i in range(len(lab))]

    @property
    def step_multiset(self) -> Counter:
        return Counter(_pair(a, b) for a, b in self.steps())

    @property
    def has_self_steps(self) -> bool:
        return any(a == b for a, b in self.steps())

    def multiplicities(self) -> tuple[int, ...]:
        """Junction multiplicities xi, one per distinct cell, descending."""
        return tuple(sorted((c // 2 for c in self.step_multiset.values()), reverse=True))


def enumerate_even_classes(k: int, allow_self_steps: bool, budget: int = CLASS_BUDGET) -> Iterator[EvenWalkClass]:
    """Every canonical even class of half-length k exactly once (lexicographic order)."""
    if k < 1:
        raise InvalidParameterError("k must be >= 1")
    if k > budget:
        raise ResourceLimitError(f"k={k} is over the class enumeration budget {budget}")
    length = 2 * k
    labels = [0]
    odd: set[Pair] = set()

    def toggle(pair):
        if pair in odd:
            odd.remove(pair)
        else:
            odd.add(pair)

    def rec(top: int):
        i = len(labels)
        prev = labels[-1]
        if i == length:
            if prev == 0 and not allow_self_steps:
                return
            last = _pair(prev, 0)
            if odd == {last}:
                yield EvenWalkClass(tuple(labels))
            return
        for y in range(top + 2):
            if y == prev and not allow_self_steps:
                continue
            pair = _pair(prev, y)
            toggle(pair)
            # each remaining step (including the closing one) fixes at most one parity
            if len(odd) <= length - i:
                labels.append(y)
                yield from rec(max(top, y))
                labels.pop()
            toggle(pair)

    yield from rec(0)


# -- tree encoding ------------------------------------------------------------

@dataclass(frozen=True)
class GluedGraphDescriptor:
    """Tree plus vertex identifications that reproduce a walk's marked graph.

    ``vertex_labels[t]`` is the walk label of tree vertex t (preorder), so
    tree vertices sharing a label are glued. ``edge_pairs[j]`` is the label
    pair of marked edge j + 1. ``preorder_consistent`` is False when no
    tree numbers its edges in the walk's marking order (see
    :func:`_restore_tree`).
    """

    tree: PlanarRootedTree
    vertex_labels: tuple[int, ...]
    edge_pairs: tuple[Pair, ...]
    r: int
    s: int
    correct_loops: int
    junction_pairs: dict = field(compare=False)
    preorder_consistent: bool = True

    @property
    def junctions(self) -> tuple[int, ...]:
        return tuple(sorted(self.junction_pairs.values(), reverse=True))

    @property
    def v(self) -> int:
        return len(set(self.vertex_labels))

    @property
    def merge_map(self) -> tuple[tuple[int, ...], ...]:
        """Partition of tree vertices into glued groups, ordered by label."""
        groups: dict[int, list[int]] = {}
        for t, lab in enumerate(self.vertex_labels):
            groups.setdefault(lab, []).append(t)
        return tuple(tuple(groups[lab]) for lab in sorted(groups))

    @property
    def gamma_key(self) -> tuple:
        """Identifies the glued graph: tree shape plus the identifications."""
        return (self.tree.encoding, self.merge_map)


def _marked_steps(cls: EvenWalkClass) -> list[tuple[int, int]]:
    # within each cell the 1st, 3rd, ... traversals are marked
    seen: Counter = Counter()
    marked = []
    for a, b in cls.steps():
        pair = _pair(a, b)
        if seen[pair] % 2 == 0:
            marked.append((a, b))
        seen[pair] += 1
    return marked


def _restore_tree(marked: list[tuple[int, int]]) -> tuple[list[int], list[int], bool]:
    """Rebuild a tree whose glued image is the marked graph.

    Marked edge j becomes tree edge j: it hangs from a tree vertex whose label
    is one endpoint of the edge, and the new child carries the other
    endpoint. The first pass only allows parents on the current root path,
    deepest first, which makes edge numbers agree with the preorder of the
    tree. A choice that later strands an edge is undone (depth-first search).

    Tie rule: when marked edges j-1 and j join the same two labels, edge j
    must continue from the head of edge j-1, so the two edges are consecutive
    on a path. Walk 0 1 0 1 marks {0,1} twice and gives a 2-edge path whose
    ends are glued, not a cherry with glued leaves.

    Some walks admit no such tree. In 0 1 2 0 1 3 1 2 4 2 the edge {2,4}
    must hang from the label-2 vertex after edge {1,3} has moved the root path
    away from it. A second pass then also allows off-path parents (most recent
    first) and the third return value is False.
    """
    k = len(marked)
    pairs = [_pair(a, b) for a, b in marked]

    def search(allow_off_path: bool):
        parent = [-1]
        vlabel = [0]

        def path_to(u: int) -> list[int]:
            out = []
            while u >= 0:
                out.append(u)
                u = parent[u]
            return out[::-1]

        def rec(j: int, stack: list[int]) -> bool:
            if j == k:
                return True
            a, b = pairs[j]
            if j and pairs[j] == pairs[j - 1]:
                options = [stack]
            else:
                options = [stack[: i + 1] for i in range(len(stack) - 1, -1, -1) if vlabel[stack[i]] in (a, b)]
                if allow_off_path:
                    on_path = set(stack)
                    options += [path_to(u) for u in range(len(parent) - 1, -1, -1)
                                if u not in on_path and vlabel[u] in (a, b)]
            for path in options:
                u = path[-1]
                parent.append(u)
                vlabel.append(b if vlabel[u] == a else a)
                if rec(j + 1, path + [len(parent) - 1]):
                    return True
                parent.pop()
                vlabel.pop()
            return False

        return (parent, vlabel) if rec(0, [0]) else None

    found = search(False)
    if found:
        return found[0], found[1], True
    found = search(True)
    if found is None:
        raise InvariantViolation(f"no tree glues onto the marked graph {pairs}")
    return found[0], found[1], False


def _to_preorder(parent: list[int], vlabel: list[int]) -> tuple[list[int], list[int]]:
    """Renumber vertices in preorder, children ordered by edge number."""
    children: list[list[int]] = [[] for _ in parent]
    for v, u in enumerate(parent):
        if u >= 0:
            children[u].append(v)
    order = []
    todo = [0]
    while todo:
        v = todo.pop()
        order.append(v)
        todo.extend(reversed(children[v]))
    new_id = {v: i for i, v in enumerate(order)}
    return [new_id[parent[v]] if parent[v] >= 0 else -1 for v in order], [vlabel[v] for v in order]


def _classify_gluings(parent: list[int], vlabel: list[int]) -> tuple[int, int]:
    """Split the identifications into (ordinary, cluster) counts.

    Two tree vertices at distance 2 are ends of edges sharing a cluster
    center; identifying them is a cluster gluing. Within each glued group
    we use as many cluster gluings as its distance-2 graph allows, and the
    remaining merges are ordinary.
    """
    nbrs: list[set[int]] = [set() for _ in parent]
    for t, u in enumerate(parent):
        if u >= 0:
            nbrs[t].add(u)
            nbrs[u].add(t)
    groups: dict[int, list[int]] = {}
    for t, lab in enumerate(vlabel):
        groups.setdefault(lab, []).append(t)
    r = s = 0
    for members in groups.values():
        if len(members) < 2:
            continue
        g = nx.Graph()
        g.add_nodes_from(members)
        for a, b in itertools.combinations(members, 2):
            if nbrs[a] & nbrs[b]:
                g.add_edge(a, b)
        comps = nx.number_connected_components(g)
        s += len(members) - comps
        r += comps - 1
    return r, s


def _increasing_cycle(numbers: list[list[int]]) -> bool:
    """Can the cycle be walked from some edge, in some direction, with increasing edge numbers?"""
    size = len(numbers)
    for seq in (numbers, numbers[::-1]):
        for start in range(size):
            last = 0
            for i in range(size):
                nxt = [x for x in seq[(start + i) % size] if x > last]
                if not nxt:
                    break
                last = min(nxt)
            else:
                return True
    return False


def _count_correct_loops(edge_pairs: list[Pair], k: int) -> int:
    numbers: dict[Pair, list[int]] = {}
    for j, pair in enumerate(edge_pairs, start=1):
        numbers.setdefault(pair, []).append(j)
    g = nx.Graph(list(numbers))
    count = 0
    for cyc in nx.simple_cycles(g, length_bound=k):
        if len(cyc) < 3:
            continue
        count += _increasing_cycle([numbers[_pair(cyc[i], cyc[(i + 1) % len(cyc)])] for i in range(len(cyc))])
    return count


def encode_walk(cls: EvenWalkClass) -> GluedGraphDescriptor:
    if cls.has_self_steps:
        raise UnsupportedClassError("classes with self-steps have no tree encoding")
    marked = _marked_steps(cls)
    if len(marked) != cls.k:
        raise InvariantViolation("an even walk must have exactly k marked steps")
    parent, vlabel, preorder = _restore_tree(marked)
    parent, vlabel = _to_preorder(parent, vlabel)
    tree = PlanarRootedTree.from_parents(parent)
    r, s = _classify_gluings(parent, vlabel)
    edge_pairs = [_pair(a, b) for a, b in marked]
    junction_pairs = dict(Counter(edge_pairs))
    desc = GluedGraphDescriptor(
        tree, tuple(vlabel), tuple(edge_pairs), r, s, _count_correct_loops(edge_pairs, cls.k), junction_pairs,
        preorder,
    )
    if desc.v != cls.v or desc.v != cls.k + 1 - (r + s):
        raise InvariantViolation(f"vertex count mismatch for {cls.labels}")
    return desc


# -- contributions ------------------------------------------------------------------

def _falling(n: int, v: int) -> int:
    out = 1
    for i in range(v):
        out *= n - i
    return out


def _contribution(v: int, xis: tuple[int, ...], n: int, p: Fraction, dist: EntryDistribution) -> Fraction:
    if n < v:
        return Fraction(0)
    val = Fraction(_falling(n, v), n)
    for xi in xis:
        val *= dist.even_moment(xi) / (n * p ** (xi - 1))
    return val


def class_contribution_exact(cls: EvenWalkClass, n: int, p: float, dist: EntryDistribution) -> Fraction:
    if p <= 0:
        raise InvalidParameterError("p must be positive")
    return _contribution(cls.v, cls.multiplicities(), n, Fraction(p), dist)


def class_contribution(cls: EvenWalkClass, n: int, p: float, dist: EntryDistribution) -> float:
    """Expected contribution of all labeled walks in the class to E (1/N) Tr A^{2k}."""
    return float(class_contribution_exact(cls, n, p, dist))


@lru_cache(maxsize=None)
def class_signatures(k: int) -> tuple[tuple[int, tuple[int, ...], int], ...]:
    """(v, multiplicities, number of classes) over every even class, self-steps included."""
    sig = Counter((c.v, c.multiplicities()) for c in enumerate_even_classes(k, True))
    return tuple((v, xis, cnt) for (v, xis), cnt in sorted(sig.items()))


def exact_moment_fraction(n: int, p: float, k: int, dist: EntryDistribution) -> Fraction:
    if n < 1 or p <= 0:
        raise InvalidParameterError("need n >= 1 and p > 0")
    pf = Fraction(p)
    return sum((cnt * _contribution(v, xis, n, pf, dist) for v, xis, cnt in class_signatures(k)), Fraction(0))


def exact_moment(n: int, p: float, k: int, dist: EntryDistribution) -> float:
    """E (1/N) Tr (A_N^(p))^{2k}, exactly, rounded once to a float."""
    return float(exact_moment_fraction(n, p, k, dist))


def brute_force_moment(n: int, p: float, k: int, dist: EntryDistribution, budget: int = BRUTE_FORCE_BUDGET) -> float:
    """Same quantity by summing over all N^{2k} labeled closed walks."""
    if n ** (2 * k) > budget:
        raise ResourceLimitError(f"N^(2k) = {n ** (2 * k)} walks is over budget {budget}")
    factor_cache: dict[int, float] = {}

    def cell_factor(c: int) -> float:
        if c not in factor_cache:
            factor_cache[c] = 0.0 if c % 2 else float(dist.moment(c)) / (n * p ** (c / 2 - 1))
        return factor_cache[c]

    terms = []
    for walk in itertools.product(range(n), repeat=2 * k):
        cells = Counter(_pair(walk[i], walk[(i + 1) % (2 * k)]) for i in range(2 * k))
        term = 1.0
        for c in cells.values():
            term *= cell_factor(c)
            if term == 0.0:
                break
        if term:
            terms.append(term)
    return math.fsum(terms) / n


# -- censuses -------------------------------------------------------------------------

def type_census(k: int) -> dict[tuple[int, int], int]:
    census = Counter()
    for cls in enumerate_even_classes(k, False):
        d = encode_walk(cls)
        census[(d.r, d.s)] += 1
    return dict(sorted(census.items()))


def gamma_multiplicities(k: int) -> dict[tuple, list[EvenWalkClass]]:
    """Self-step-free classes grouped by the glued graph they encode to."""
    groups: dict[tuple, list[EvenWalkClass]] = {}
    for cls in enumerate_even_classes(k, False):
        groups.setdefault(encode_walk(cls).gamma_key, []).append(cls)
    return groups


def class_dump_line(cls: EvenWalkClass, n: int, p: float, dist: EntryDistribution) -> str:
    """``labels;r;s;v;contribution``; r and s are empty for self-step classes."""
    if cls.has_self_steps:
        r = s = ""
    else:
        d = encode_walk(cls)
        r, s = str(d.r), str(d.s)
    labels = " ".join(map(str, cls.labels))
    return f"{labels};{r};{s};{cls.v};{class_contribution(cls, n, p, dist):.17g}"
