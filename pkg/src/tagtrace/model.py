"""The community model: users, items, tags and the tag assignments linking them.

A :class:`Community` is built once from a flat list of assignments and never
mutated.  Entity labels are interned into dense per-kind ordinals (in sorted
label order, so the numbering does not depend on input order) and six
directional indexes are derived from the assignment list.
"""

from __future__ import annotations

import bisect
import enum
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import UnknownEntityError


class EntityKind(str, enum.Enum):
    USER = "user"
    ITEM = "item"
    TAG = "tag"


class EntityId(NamedTuple):
    kind: EntityKind
    ordinal: int


class TagAssignment(NamedTuple):
    """One (user, tag, item, timestamp) event, labels given as raw strings."""

    user: str
    tag: str
    item: str
    timestamp: int


def _index(n: int, keys: np.ndarray, values: np.ndarray) -> tuple[frozenset[int], ...]:
    buckets: list[set[int]] = [set() for _ in range(n)]
    for k, v in zip(keys.tolist(), values.tolist()):
        buckets[k].add(v)
    return tuple(frozenset(b) for b in buckets)


@dataclass(frozen=True, eq=False)
class Community:
    """Immutable tagging community.

    ``assignments`` is timestamp-ascending (ties keep input order).  The
    ``rows`` array mirrors it in ordinal form with columns
    ``(user, tag, item, timestamp)``.  Index tuples are addressed by ordinal,
    e.g. ``user_items[u]`` is the library of user ``u``.
    """

    assignments: tuple[TagAssignment, ...]
    users: tuple[str, ...]
    items: tuple[str, ...]
    tags: tuple[str, ...]
    rows: np.ndarray = field(repr=False)
    user_items: tuple[frozenset[int], ...] = field(repr=False)
    user_tags: tuple[frozenset[int], ...] = field(repr=False)
    item_users: tuple[frozenset[int], ...] = field(repr=False)
    item_tags: tuple[frozenset[int], ...] = field(repr=False)
    tag_users: tuple[frozenset[int], ...] = field(repr=False)
    tag_items: tuple[frozenset[int], ...] = field(repr=False)

    def __eq__(self, other):
        # order inside a group of equal timestamps carries no meaning
        if not isinstance(other, Community):
            return NotImplemented
        return (
            len(self.assignments) == len(other.assignments)
            and set(self.assignments) == set(other.assignments)
            and self.users == other.users
            and self.items == other.items
            and self.tags == other.tags
        )

    __hash__ = None  # type: ignore[assignment]

    @property
    def num_users(self) -> int:
        return len(self.users)

    @property
    def num_items(self) -> int:
        return len(self.items)

    @property
    def num_tags(self) -> int:
        return len(self.tags)

    @property
    def num_assignments(self) -> int:
        return len(self.assignments)

    @property
    def timestamps(self) -> np.ndarray:
        return self.rows[:, 3]

    def __len__(self) -> int:
        return len(self.assignments)

    def user_id(self, label: str) -> EntityId:
        return EntityId(EntityKind.USER, _lookup(self.users, label.strip(), "user"))

    def item_id(self, label: str) -> EntityId:
        return EntityId(EntityKind.ITEM, _lookup(self.items, label.strip(), "item"))

    def tag_id(self, label: str) -> EntityId:
        return EntityId(EntityKind.TAG, _lookup(self.tags, label.strip(), "tag"))

    def user_ordinal(self, user: EntityId | str | int) -> int:
        """Resolve a user given as EntityId, label or ordinal."""
        if isinstance(user, EntityId):
            if user.kind != EntityKind.USER:
                raise UnknownEntityError(f"expected a user id, got {user.kind.value}")
            ordinal = user.ordinal
        elif isinstance(user, str):
            return self.user_id(user).ordinal
        else:
            ordinal = int(user)
        if not 0 <= ordinal < self.num_users:
            raise UnknownEntityError(f"unknown user ordinal {ordinal}")
        return ordinal

    def user_activity(self) -> np.ndarray:
        """Number of assignments per user, indexed by ordinal."""
        return np.bincount(self.rows[:, 0], minlength=self.num_users)


def _lookup(labels: tuple[str, ...], label: str, kind: str) -> int:
    # labels are sorted
    pos = bisect.bisect_left(labels, label)
    if pos == len(labels) or labels[pos] != label:
        raise UnknownEntityError(f"unknown {kind} {label!r}")
    return pos


def build_community(assignments: Iterable[TagAssignment | Sequence]) -> Community:
    """Build a community from (user, tag, item, timestamp) tuples.

    Labels are trimmed, exact duplicate 4-tuples collapse to one, and the
    result is ordered by timestamp with ties kept in first-seen input order.
    """
    seen: dict[TagAssignment, None] = {}
    for a in assignments:
        user, tag, item, ts = a
        key = TagAssignment(str(user).strip(), str(tag).strip(), str(item).strip(), int(ts))
        seen.setdefault(key, None)
    ordered = sorted(seen, key=lambda a: a.timestamp)  # stable

    users = tuple(sorted({a.user for a in ordered}))
    items = tuple(sorted({a.item for a in ordered}))
    tags = tuple(sorted({a.tag for a in ordered}))
    uid = {s: i for i, s in enumerate(users)}
    iid = {s: i for i, s in enumerate(items)}
    tid = {s: i for i, s in enumerate(tags)}

    rows = np.array(
        [(uid[a.user], tid[a.tag], iid[a.item], a.timestamp) for a in ordered],
        dtype=np.int64,
    ).reshape(-1, 4)
    u, t, i = rows[:, 0], rows[:, 1], rows[:, 2]
    return Community(
        assignments=tuple(ordered),
        users=users,
        items=items,
        tags=tags,
        rows=rows,
        user_items=_index(len(users), u, i),
        user_tags=_index(len(users), u, t),
        item_users=_index(len(items), i, u),
        item_tags=_index(len(items), i, t),
        tag_users=_index(len(tags), t, u),
        tag_items=_index(len(tags), t, i),
    )


def user_view(c: Community, u: EntityId | str | int) -> tuple[frozenset[str], frozenset[str]]:
    """Return the (library, vocabulary) of a user as label sets."""
    k = c.user_ordinal(u)
    return (
        frozenset(c.items[i] for i in c.user_items[k]),
        frozenset(c.tags[t] for t in c.user_tags[k]),
    )


def summary_stats(c: Community) -> dict[str, int]:
    return {
        "num_users": c.num_users,
        "num_items": c.num_items,
        "num_tags": c.num_tags,
        "num_assignments": c.num_assignments,
    }
