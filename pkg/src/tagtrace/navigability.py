"""Item-diversity metrics and the neighbor-based prediction harness.

Popularity of an item defaults to the number of distinct users holding it in
their library; ``popularity="assignments"`` counts raw tag assignments instead.
Entropies are in bits unless another ``log_base`` is given.
"""

from __future__ import annotations

import bisect
import math
from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

from .errors import ConfigError, EmptyCommunityError, NoNeighborsError, SpanTooShortError
from .graph import InterestGraph, SimilarityKind, as_threshold, graph_from_sets, largest_component
from .model import Community

Z95 = 1.96
MODES = ("interest_graph", "largest_component_total", "random_component", "random_graph")


@dataclass(frozen=True)
class PopularityDistribution:
    counts: Mapping[int, int]
    total: int

    @classmethod
    def from_counts(cls, counts: Mapping[int, int]) -> "PopularityDistribution":
        counts = {k: int(v) for k, v in counts.items()}
        if any(v < 1 for v in counts.values()):
            raise ValueError("popularity counts must be >= 1")
        return cls(counts, sum(counts.values()))

    def __len__(self):
        return len(self.counts)


def _log(x: float, base: float) -> float:
    if base == 2:
        return math.log2(x)
    if base == math.e:
        return math.log(x)
    if base == 10:
        return math.log10(x)
    return math.log(x) / math.log(base)


def entropy(d: PopularityDistribution | Mapping[int, int], log_base: float = 2) -> float:
    if not isinstance(d, PopularityDistribution):
        d = PopularityDistribution.from_counts(d)
    if not d.counts:
        raise EmptyCommunityError("entropy of an empty distribution")
    if log_base <= 1:
        raise ValueError("log_base must be > 1")
    total = d.total
    h = -math.fsum((n / total) * _log(n / total, log_base) for n in d.counts.values())
    return max(h, 0.0)


def _popularity_counts(pairs: Iterable[tuple[int, int]]) -> Counter:
    return Counter(item for _, item in pairs)


def item_popularity(c: Community, until: int | None = None, popularity: str = "users") -> PopularityDistribution:
    rows = c.rows
    if until is not None:
        rows = rows[: bisect.bisect_right(c.timestamps.tolist(), until)]
    if len(rows) == 0:
        raise EmptyCommunityError("no assignments at or before the requested time")
    if popularity == "users":
        pairs = {(u, i) for u, i in zip(rows[:, 0].tolist(), rows[:, 2].tolist())}
        counts = _popularity_counts(pairs)
    elif popularity == "assignments":
        counts = Counter(rows[:, 2].tolist())
    else:
        raise ConfigError(f"unknown popularity definition {popularity!r}")
    return PopularityDistribution.from_counts(counts)


@dataclass(frozen=True)
class EntropyPoint:
    period_end: int
    entropy: float
    num_items: int


def entropy_timeline(
    c: Community, interval: int, log_base: float = 2, popularity: str = "users"
) -> list[EntropyPoint]:
    """Entropy of item popularity at every interval boundary.

    Boundaries are ``first + k * interval`` for ``k = 1..K`` with the last one
    at or after the final timestamp, so the final point covers the whole trace.
    """
    if interval <= 0:
        raise ConfigError("interval must be positive")
    if c.num_assignments == 0:
        raise EmptyCommunityError("entropy timeline of an empty community")
    ts = c.timestamps.tolist()
    first, last = ts[0], ts[-1]
    n_bounds = max(1, -(-(last - first) // interval))
    users, items = c.rows[:, 0].tolist(), c.rows[:, 2].tolist()

    counts: Counter = Counter()
    seen: set[tuple[int, int]] = set()
    points = []
    pos = 0
    for k in range(1, n_bounds + 1):
        bound = first + k * interval
        while pos < len(ts) and ts[pos] <= bound:
            u, i = users[pos], items[pos]
            if popularity == "assignments":
                counts[i] += 1
            elif (u, i) not in seen:
                seen.add((u, i))
                counts[i] += 1
            pos += 1
        d = PopularityDistribution(dict(counts), sum(counts.values()))
        points.append(EntropyPoint(bound, entropy(d, log_base), len(counts)))
    return points


def _union_entropy(libraries: Iterable[frozenset[int]], log_base: float) -> float:
    counts: Counter = Counter()
    for lib in libraries:
        counts.update(lib)
    return entropy(PopularityDistribution(dict(counts), sum(counts.values())), log_base)


def neighborhood_entropy(c: Community, g: InterestGraph, u, log_base: float = 2) -> float:
    """Entropy over the union of the neighbors' libraries (the user's own excluded)."""
    k = c.user_ordinal(u)
    nbrs = g.neighbors(k)
    if not nbrs:
        raise NoNeighborsError(f"user {c.users[k]!r} has no neighbors")
    return _union_entropy((c.user_items[n] for n in sorted(nbrs)), log_base)


@dataclass(frozen=True)
class NeighborhoodEntropyReport:
    threshold: Fraction
    mode: str
    mean: float
    ci95_half_width: float
    users_measured: int
    trials: int = 0
    trial_spread: float = 0.0

    def to_dict(self) -> dict:
        return {
            "threshold": float(self.threshold),
            "mode": self.mode,
            "mean": self.mean,
            "ci95_half_width": self.ci95_half_width,
            "users_measured": self.users_measured,
            "trials": self.trials,
            "trial_spread": self.trial_spread,
        }


def _mean_ci(values: np.ndarray) -> tuple[float, float]:
    mean = float(np.mean(values))
    if len(values) < 2:
        return mean, 0.0
    return mean, float(Z95 * np.std(values, ddof=1) / math.sqrt(len(values)))


def average_neighborhood_entropy(
    c: Community,
    g: InterestGraph,
    mode: str = "interest_graph",
    trials: int = 30,
    seed: int | None = None,
    log_base: float = 2,
) -> NeighborhoodEntropyReport:
    """Average neighborhood entropy in the graph or in a random baseline.

    The random modes replace each measured user's neighbor set with a uniform
    sample of the same size (without replacement, excluding the user) from the
    largest component or from all users, averaging over ``trials`` draws.  The
    confidence interval is across users; ``trial_spread`` is the standard
    deviation of the per-trial means.
    """
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}; expected one of {', '.join(MODES)}")
    measured = [u for u in g.nodes if g.adjacency[u]]
    if not measured:
        raise NoNeighborsError("graph has no node with neighbors")

    if mode == "largest_component_total":
        lc = largest_component(g)
        h = _union_entropy((c.user_items[u] for u in lc), log_base)
        return NeighborhoodEntropyReport(g.threshold, mode, h, 0.0, len(lc))

    if mode == "interest_graph":
        values = np.array([neighborhood_entropy(c, g, u, log_base) for u in measured])
        mean, ci = _mean_ci(values)
        return NeighborhoodEntropyReport(g.threshold, mode, mean, ci, len(measured))

    if trials < 1:
        raise ConfigError("random modes need trials >= 1")
    pool = np.array(largest_component(g) if mode == "random_component" else g.nodes, dtype=np.int64)
    rng = np.random.default_rng(seed)
    per_trial = np.empty((trials, len(measured)))
    for t in range(trials):
        for col, u in enumerate(measured):
            candidates = pool[pool != u]
            size = min(len(g.adjacency[u]), len(candidates))
            sample = rng.choice(candidates, size=size, replace=False)
            per_trial[t, col] = _union_entropy((c.user_items[int(n)] for n in np.sort(sample)), log_base)
    per_user = per_trial.mean(axis=0)
    mean, ci = _mean_ci(per_user)
    spread = float(np.std(per_trial.mean(axis=1), ddof=1)) if trials > 1 else 0.0
    return NeighborhoodEntropyReport(g.threshold, mode, mean, ci, len(measured), trials, spread)


@dataclass(frozen=True)
class WindowResult:
    boundary: int
    adds: int
    hits: int


@dataclass(frozen=True)
class HitRatioReport:
    kind: SimilarityKind
    threshold: Fraction
    granularity: int
    windows_evaluated: int
    adds_total: int
    hits_total: int
    windows: tuple[WindowResult, ...] = field(repr=False, default=())

    @property
    def hit_ratio(self) -> float | None:
        """``None`` when no item was added in any window."""
        return self.hits_total / self.adds_total if self.adds_total else None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "threshold": float(self.threshold),
            "granularity": self.granularity,
            "windows_evaluated": self.windows_evaluated,
            "adds_total": self.adds_total,
            "hits_total": self.hits_total,
            "hit_ratio": self.hit_ratio,
            "windows": [{"boundary": w.boundary, "adds": w.adds, "hits": w.hits} for w in self.windows],
        }


def _evaluate_window(rows: np.ndarray, ts: list[int], boundary: int, granularity: int,
                     kind: SimilarityKind, threshold: Fraction) -> WindowResult:
    cut = bisect.bisect_right(ts, boundary)
    end = bisect.bisect_right(ts, boundary + granularity)
    future = rows[cut:end]
    if len(future) == 0:
        return WindowResult(boundary, 0, 0)

    past = rows[:cut]
    libraries: dict[int, set[int]] = defaultdict(set)
    for u, i in zip(past[:, 0].tolist(), past[:, 2].tolist()):
        libraries[u].add(i)

    adds = sorted({(u, i) for u, i in zip(future[:, 0].tolist(), future[:, 2].tolist())
                   if i not in libraries.get(u, ())})
    if not adds:
        return WindowResult(boundary, 0, 0)

    col = 1 if kind is SimilarityKind.USER_TAG else 2
    sets: dict[int, set[int]] = defaultdict(set)
    postings: dict[int, set[int]] = defaultdict(set)
    for u, x in zip(past[:, 0].tolist(), past[:, col].tolist()):
        sets[u].add(x)
        postings[x].add(u)
    g = graph_from_sets(sets, postings.values(), kind, threshold, sets.keys())

    hits = 0
    reach: dict[int, set[int]] = {}
    for u, i in adds:
        if u not in reach:
            reach[u] = set().union(*(libraries[n] for n in g.adjacency.get(u, ())))
        hits += i in reach[u]
    return WindowResult(boundary, len(adds), hits)


def hit_ratio(
    c: Community,
    kind: SimilarityKind | str = SimilarityKind.USER_ITEM,
    threshold=Fraction(1, 100),
    granularity: int = 3600,
    threads: int = 1,
) -> HitRatioReport:
    """Fraction of newly added library items already held by a user's neighbors.

    For every boundary ``T = first + k * granularity`` before the last
    timestamp, the interest graph is rebuilt from all assignments at or before
    ``T``; each item a user adds to their library in ``(T, T + granularity]``
    is a hit when some neighbor at ``T`` already holds it.  Windows are
    independent, so ``threads > 1`` evaluates them on a pool with identical
    results.
    """
    kind = SimilarityKind(kind)
    t = as_threshold(threshold)
    if granularity <= 0:
        raise ConfigError("granularity must be positive")
    if c.num_assignments == 0:
        raise EmptyCommunityError("hit ratio of an empty community")
    ts = c.timestamps.tolist()
    first, last = ts[0], ts[-1]
    if last <= first:
        raise SpanTooShortError("trace needs assignments after the first boundary")
    boundaries = list(range(first, last, granularity))

    def run(b):
        return _evaluate_window(c.rows, ts, b, granularity, kind, t)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            windows = list(pool.map(run, boundaries))
    else:
        windows = [run(b) for b in boundaries]
    return HitRatioReport(
        kind=kind,
        threshold=t,
        granularity=granularity,
        windows_evaluated=len(windows),
        adds_total=sum(w.adds for w in windows),
        hits_total=sum(w.hits for w in windows),
        windows=tuple(windows),
    )
