"""Pólya urn simulation and a synthetic tagging-trace generator built on it.

Each draw picks a color with probability proportional to its ball count and
returns the ball together with one more of the same color.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .activity import HoerlParams, eval_hoerl
from .errors import ConfigError
from .model import TagAssignment


@dataclass(frozen=True)
class UrnState:
    color_counts: tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(n) for n in self.color_counts)
        object.__setattr__(self, "color_counts", counts)
        if len(counts) < 2:
            raise ConfigError("an urn needs at least two colors")
        if any(n < 1 for n in counts):
            raise ConfigError("every color needs at least one ball")

    @classmethod
    def parse(cls, text: str) -> "UrnState":
        try:
            counts = tuple(int(v) for v in text.split(","))
        except ValueError:
            raise ConfigError(f"bad urn state {text!r}; expected comma-separated ball counts") from None
        return cls(counts)

    @property
    def total(self) -> int:
        return sum(self.color_counts)


@dataclass(frozen=True)
class UrnTrajectory:
    """Ball counts after every step; ``counts[s]`` is the state after step ``s + 1``."""

    initial: UrnState
    counts: np.ndarray = field(repr=False)

    @property
    def steps(self) -> int:
        return len(self.counts)

    @property
    def fractions(self) -> np.ndarray:
        return self.counts / self.counts.sum(axis=1, keepdims=True)

    @property
    def final_counts(self) -> tuple[int, ...]:
        return tuple(int(n) for n in self.counts[-1])


def _draw(counts: list[int], r: float) -> int:
    # r is uniform on [0, total)
    acc = 0
    for color, n in enumerate(counts):
        acc += n
        if r < acc:
            return color
    return len(counts) - 1


def urn_run(initial: UrnState, steps: int, seed: int | None = None) -> UrnTrajectory:
    if steps < 1:
        raise ConfigError("steps must be >= 1")
    rng = np.random.default_rng(seed)
    counts = list(initial.color_counts)
    total = initial.total
    draws = (rng.random(steps) * np.arange(total, total + steps)).tolist()
    colors = np.empty(steps, dtype=np.int64)
    for s, r in enumerate(draws):
        color = _draw(counts, r)
        counts[color] += 1
        colors[s] = color
    onehot = np.zeros((steps, len(counts)), dtype=np.int64)
    onehot[np.arange(steps), colors] = 1
    history = np.cumsum(onehot, axis=0) + np.asarray(initial.color_counts, dtype=np.int64)
    return UrnTrajectory(initial, history)


def urn_converged_fraction(traj: UrnTrajectory | np.ndarray, window: int, tol: float) -> np.ndarray | None:
    """Final fraction vector if every color moved less than ``tol`` over the
    last ``window`` steps, else ``None``."""
    fractions = traj.fractions if isinstance(traj, UrnTrajectory) else np.asarray(traj, dtype=float)
    if window < 1 or window > len(fractions):
        raise ConfigError(f"window {window} not in 1..{len(fractions)}")
    tail = fractions[-window:]
    oscillation = (tail.max(axis=0) - tail.min(axis=0)).max()
    return fractions[-1].copy() if oscillation < tol else None


def tag_trajectory(assignments: Sequence[TagAssignment], item: str) -> np.ndarray:
    """Running tag-frequency vectors of one item, one row per assignment to it.

    Columns follow the sorted tag labels seen on the item.
    """
    tags = [a.tag for a in sorted(assignments, key=lambda a: a.timestamp) if a.item == item]
    if not tags:
        raise ConfigError(f"item {item!r} has no assignments")
    labels = sorted(set(tags))
    col = {t: k for k, t in enumerate(labels)}
    onehot = np.zeros((len(tags), len(labels)))
    onehot[np.arange(len(tags)), [col[t] for t in tags]] = 1
    running = np.cumsum(onehot, axis=0)
    return running / running.sum(axis=1, keepdims=True)


DEFAULT_ACTIVITY = HoerlParams(60.0, 0.99, -0.3)


@dataclass(frozen=True)
class SyntheticTraceConfig:
    """Knobs of the synthetic trace generator.

    ``num_tags`` is the global vocabulary; every fresh item picks
    ``len(urn_init.color_counts)`` distinct tags from it for its urn colors.
    Users are dealt round-robin by activity rank into ``interest_groups``
    groups and copy only from libraries of their own group; one group means
    copying from the whole community.
    """

    num_users: int = 200
    num_items: int = 5000
    num_tags: int = 400
    assignments_per_user: HoerlParams = DEFAULT_ACTIVITY
    urn_init: UrnState = UrnState((1, 1, 1, 1))
    copy_probability: float = 0.5
    interest_groups: int = 20
    start_time: int = 1_100_000_000
    time_step: int = 600
    seed: int = 42

    def __post_init__(self):
        if self.num_users < 1:
            raise ConfigError("num_users must be >= 1")
        if self.num_items < 1:
            raise ConfigError("num_items must be >= 1")
        if not 0 <= self.copy_probability <= 1:
            raise ConfigError("copy_probability must be in [0, 1]")
        if self.interest_groups < 1:
            raise ConfigError("interest_groups must be >= 1")
        if self.num_tags < len(self.urn_init.color_counts):
            raise ConfigError("num_tags must cover the urn colors of one item")
        if self.start_time < 0 or self.time_step < 1:
            raise ConfigError("start_time must be >= 0 and time_step >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    def with_(self, **changes) -> "SyntheticTraceConfig":
        return replace(self, **changes)


def activity_quotas(params: HoerlParams, num_users: int) -> list[int]:
    """Assignments per user by activity rank, rounded half up, at least one."""
    values = eval_hoerl(params, np.arange(1, num_users + 1, dtype=float))
    return [max(1, int(math.floor(v + 0.5))) for v in np.atleast_1d(values)]


def generate_trace(cfg: SyntheticTraceConfig) -> list[TagAssignment]:
    rng = np.random.default_rng(cfg.seed)
    width = len(str(max(cfg.num_users, cfg.num_items, cfg.num_tags)))
    user_label = [f"u{r:0{width}d}" for r in range(1, cfg.num_users + 1)]
    quotas = activity_quotas(cfg.assignments_per_user, cfg.num_users)
    remaining = list(quotas)
    n_colors = len(cfg.urn_init.color_counts)

    group = [u % cfg.interest_groups for u in range(cfg.num_users)]
    holders: list[set[int]] = []  # per item, users holding it
    group_holders: list[dict[int, set[int]]] = []  # per item, holders by group
    group_items: list[list[int]] = [[] for _ in range(cfg.interest_groups)]
    item_tags: list[list[int]] = []  # per item, tag id of each urn color
    urns: list[list[int]] = []
    sole_count = [0] * cfg.num_users  # items held by this user alone within its group

    def take(user: int, item: int) -> None:
        if user in holders[item]:
            return
        holders[item].add(user)
        members = group_holders[item].setdefault(group[user], set())
        if not members:
            group_items[group[user]].append(item)
        elif len(members) == 1:
            sole_count[next(iter(members))] -= 1
        members.add(user)
        if len(members) == 1:
            sole_count[user] += 1

    def pick_copy(user: int) -> int | None:
        g = group[user]
        pool = group_items[g]
        if len(pool) - sole_count[user] <= 0:
            return None
        while True:
            item = pool[int(rng.integers(len(pool)))]
            if group_holders[item][g] - {user}:
                return item

    def fresh() -> int:
        holders.append(set())
        group_holders.append({})
        item_tags.append(rng.choice(cfg.num_tags, size=n_colors, replace=False).tolist())
        urns.append(list(cfg.urn_init.color_counts))
        return len(holders) - 1

    out: list[TagAssignment] = []
    clock = cfg.start_time
    while any(remaining):
        for user in range(cfg.num_users):
            if not remaining[user]:
                continue
            remaining[user] -= 1
            item = None
            if rng.random() < cfg.copy_probability:
                item = pick_copy(user)
            if item is None:
                if len(holders) < cfg.num_items:
                    item = fresh()
                else:
                    item = int(rng.integers(len(holders)))
            urn = urns[item]
            color = _draw(urn, rng.random() * sum(urn))
            urn[color] += 1
            take(user, item)
            out.append(TagAssignment(
                user_label[user],
                f"t{item_tags[item][color]:0{width}d}",
                f"i{item:0{width}d}",
                clock,
            ))
            clock += cfg.time_step
    return out
