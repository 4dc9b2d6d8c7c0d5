"""Interest-sharing graphs over users and their component structure.

Similarities are exact ratios of integers and thresholds are kept as
:class:`fractions.Fraction`, so ``ratio > t`` is decided by integer
cross-multiplication.  Candidate pairs come from an inverted index
(item -> users or tag -> users); pairs sharing nothing are never visited.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from itertools import combinations
from typing import IO, Iterable, Iterator, Mapping, Sequence

from .errors import EmptyCommunityError, ThresholdError, UnknownEntityError
from .model import Community, EntityId


class SimilarityKind(str, enum.Enum):
    USER_ITEM = "user_item"
    USER_TAG = "user_tag"
    DIRECTED_USER_ITEM = "directed_user_item"

    @property
    def directed(self) -> bool:
        return self is SimilarityKind.DIRECTED_USER_ITEM


def as_threshold(t: Fraction | str | float | int | Decimal) -> Fraction:
    """Parse a threshold into an exact rational in [0, 1).

    Floats go through their shortest repr so ``0.3`` means 3/10.
    """
    try:
        if isinstance(t, Fraction):
            value = t
        elif isinstance(t, float):
            value = Fraction(repr(t))
        else:
            value = Fraction(str(t).strip())
    except (ValueError, ZeroDivisionError):
        raise ThresholdError(f"invalid threshold {t!r}") from None
    if not 0 <= value < 1:
        raise ThresholdError(f"threshold {t} outside [0, 1)")
    return value


def _sets_for(c: Community, kind: SimilarityKind):
    if kind is SimilarityKind.USER_TAG:
        return c.user_tags, c.tag_users
    return c.user_items, c.item_users


def pair_overlaps(postings: Iterable[Iterable[int]]) -> Counter:
    """Count shared entries for every user pair (k < j) co-occurring in a posting list."""
    overlaps: Counter = Counter()
    for users in postings:
        if len(users) > 1:
            overlaps.update(combinations(sorted(users), 2))
    return overlaps


def pair_ratios(
    sets: Mapping[int, frozenset] | Sequence[frozenset],
    overlaps: Mapping[tuple[int, int], int],
    kind: SimilarityKind,
) -> Iterator[tuple[int, int, int, int]]:
    """Yield ``(src, dst, numerator, denominator)`` for every candidate edge.

    Undirected kinds yield each pair once with ``src < dst``; the directed kind
    yields both orientations, the denominator being the source's library size.
    """
    for (k, j), inter in overlaps.items():
        if kind.directed:
            yield k, j, inter, len(sets[k])
            yield j, k, inter, len(sets[j])
        else:
            yield k, j, inter, len(sets[k]) + len(sets[j]) - inter


@dataclass(frozen=True)
class InterestGraph:
    """Thresholded similarity graph.

    ``adjacency`` maps every node to its out-neighbors (symmetric for
    undirected kinds).  ``weights`` holds the exact similarity of every edge,
    keyed ``(src, dst)``; undirected edges are stored once with ``src < dst``.
    """

    kind: SimilarityKind
    threshold: Fraction
    nodes: tuple[int, ...]
    adjacency: Mapping[int, frozenset[int]]
    weights: Mapping[tuple[int, int], Fraction]

    @property
    def directed(self) -> bool:
        return self.kind.directed

    def neighbors(self, u: int) -> frozenset[int]:
        try:
            return self.adjacency[u]
        except KeyError:
            raise UnknownEntityError(f"user {u} is not a node of this graph") from None

    def edges(self) -> list[tuple[int, int]]:
        return sorted(self.weights)

    @property
    def num_edges(self) -> int:
        return len(self.weights)

    def undirected_degree(self) -> dict[int, int]:
        deg = dict.fromkeys(self.nodes, 0)
        for k, j in {tuple(sorted(e)) for e in self.weights}:
            deg[k] += 1
            deg[j] += 1
        return deg


def graph_from_sets(
    sets: Mapping[int, frozenset] | Sequence[frozenset],
    postings: Iterable[Iterable[int]],
    kind: SimilarityKind,
    threshold: Fraction,
    nodes: Iterable[int],
) -> InterestGraph:
    p, q = threshold.numerator, threshold.denominator
    nodes = tuple(sorted(nodes))
    adjacency: dict[int, set[int]] = {n: set() for n in nodes}
    weights: dict[tuple[int, int], Fraction] = {}
    for src, dst, num, den in pair_ratios(sets, pair_overlaps(postings), kind):
        if num * q > p * den:
            weights[(src, dst)] = Fraction(num, den)
            adjacency[src].add(dst)
            if not kind.directed:
                adjacency[dst].add(src)
    return InterestGraph(
        kind=kind,
        threshold=threshold,
        nodes=nodes,
        adjacency={n: frozenset(v) for n, v in adjacency.items()},
        weights=dict(sorted(weights.items())),
    )


def build_graph(c: Community, kind: SimilarityKind | str, threshold) -> InterestGraph:
    kind = SimilarityKind(kind)
    t = as_threshold(threshold)
    if c.num_users == 0:
        raise EmptyCommunityError("cannot build a graph over an empty community")
    sets, postings = _sets_for(c, kind)
    return graph_from_sets(sets, postings, kind, t, range(c.num_users))


def similarity(c: Community, k: EntityId | str | int, j: EntityId | str | int, kind: SimilarityKind | str) -> float:
    return float(similarity_exact(c, k, j, kind))


def similarity_exact(c: Community, k, j, kind: SimilarityKind | str) -> Fraction:
    kind = SimilarityKind(kind)
    k, j = c.user_ordinal(k), c.user_ordinal(j)
    if k == j:
        raise ValueError("similarity of a user with itself is not defined")
    sets, _ = _sets_for(c, kind)
    a, b = sets[k], sets[j]
    inter = len(a & b)
    return Fraction(inter, len(a) if kind.directed else len(a | b))


class UnionFind:
    """Disjoint sets with union by size and path halving."""

    def __init__(self, nodes: Iterable[int] = ()):
        self.parent: dict[int, int] = {}
        self.size: dict[int, int] = {}
        for n in nodes:
            self.add(n)

    def add(self, n: int) -> None:
        if n not in self.parent:
            self.parent[n] = n
            self.size[n] = 1

    def find(self, n: int) -> int:
        parent = self.parent
        while parent[n] != n:
            parent[n] = parent[parent[n]]
            n = parent[n]
        return n

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True

    def set_size(self, n: int) -> int:
        return self.size[self.find(n)]


@dataclass(frozen=True)
class ComponentSummary:
    components_excluding_isolated: int
    isolated_count: int
    largest_component_size: int
    nonisolated_node_count: int

    def to_dict(self) -> dict:
        return {
            "components": self.components_excluding_isolated,
            "isolated": self.isolated_count,
            "largest": self.largest_component_size,
            "nonisolated": self.nonisolated_node_count,
        }


def components(g: InterestGraph) -> list[list[int]]:
    """Weakly connected components with at least two nodes, largest first."""
    uf = UnionFind()
    for k, j in g.weights:
        uf.add(k)
        uf.add(j)
        uf.union(k, j)
    groups: dict[int, list[int]] = {}
    for n in sorted(uf.parent):
        groups.setdefault(uf.find(n), []).append(n)
    return sorted(groups.values(), key=lambda m: (-len(m), m[0]))


def largest_component(g: InterestGraph) -> list[int]:
    comps = components(g)
    return comps[0] if comps else []


def component_summary(g: InterestGraph) -> ComponentSummary:
    comps = components(g)
    nonisolated = sum(len(m) for m in comps)
    return ComponentSummary(
        components_excluding_isolated=len(comps),
        isolated_count=len(g.nodes) - nonisolated,
        largest_component_size=len(comps[0]) if comps else 0,
        nonisolated_node_count=nonisolated,
    )


def threshold_sweep(
    c: Community,
    kind: SimilarityKind | str,
    thresholds: Sequence,
) -> list[tuple[Fraction, ComponentSummary]]:
    """Component summaries for many thresholds from one similarity pass.

    Edges are sorted by decreasing similarity and added to a union-find while
    thresholds are visited from high to low, so every edge is merged once.
    """
    kind = SimilarityKind(kind)
    ts = [as_threshold(t) for t in thresholds]
    if not ts:
        return []
    if c.num_users == 0:
        raise EmptyCommunityError("cannot sweep an empty community")
    sets, postings = _sets_for(c, kind)
    edges = sorted(
        ((Fraction(num, den), src, dst) for src, dst, num, den in pair_ratios(sets, pair_overlaps(postings), kind)),
        key=lambda e: e[0],
        reverse=True,
    )
    n_nodes = c.num_users
    uf = UnionFind()
    merges = 0
    largest = 0
    results: dict[int, ComponentSummary] = {}
    pos = 0
    for idx in sorted(range(len(ts)), key=lambda i: ts[i], reverse=True):
        t = ts[idx]
        while pos < len(edges) and edges[pos][0] > t:
            _, src, dst = edges[pos]
            uf.add(src)
            uf.add(dst)
            if uf.union(src, dst):
                merges += 1
                largest = max(largest, uf.set_size(src))
            pos += 1
        nonisolated = len(uf.parent)
        results[idx] = ComponentSummary(
            components_excluding_isolated=nonisolated - merges,
            isolated_count=n_nodes - nonisolated,
            largest_component_size=largest,
            nonisolated_node_count=nonisolated,
        )
    return [(ts[i], results[i]) for i in range(len(ts))]


def sweep_ladder(start, stop, step) -> list[Fraction]:
    """Inclusive arithmetic ladder of exact thresholds."""
    lo, hi, d = as_threshold(start), as_threshold(stop), Fraction(str(step))
    if d <= 0:
        raise ThresholdError("step must be positive")
    out = []
    t = lo
    while t <= hi:
        out.append(t)
        t += d
    return out


def format_fraction(t: Fraction) -> str:
    """Shortest decimal for terminating fractions, otherwise 12 significant digits."""
    d = Decimal(t.numerator) / Decimal(t.denominator)
    if Fraction(d) == t:
        return format(d.normalize(), "f")
    return f"{float(t):.12g}"


def write_edge_list(c: Community, g: InterestGraph, out: IO[str]) -> None:
    """One ``src<TAB>dst<TAB>similarity`` line per edge, by source ordinal."""
    for (src, dst), w in g.weights.items():
        out.write(f"{c.users[src]}\t{c.users[dst]}\t{float(w)!r}\n")

