"""Trace parsing and data cleaning.

Trace files are UTF-8 text with four TAB-separated columns per line::

    user <TAB> item <TAB> tag <TAB> timestamp

Empty lines and lines starting with ``#`` are ignored.  Note that the column
order differs from :class:`~tagtrace.model.TagAssignment`, which is
``(user, tag, item, timestamp)``.
"""

from __future__ import annotations

import io
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from typing import IO, Iterable, Sequence

import numpy as np

from .errors import ConfigError, MalformedLineError
from .model import TagAssignment

DEFAULT_RESERVED_TAGS = frozenset({"no-tag", "bibtex-import"})


@dataclass(frozen=True)
class RawRecord:
    user_label: str
    item_label: str
    tag_label: str
    timestamp: int
    source_line: int

    def to_assignment(self) -> TagAssignment:
        return TagAssignment(self.user_label, self.tag_label, self.item_label, self.timestamp)


def _lines(stream) -> Iterable[str]:
    if isinstance(stream, (bytes, bytearray)):
        stream = io.BytesIO(stream)
    elif isinstance(stream, str):
        stream = io.StringIO(stream)
    for line in stream:
        if isinstance(line, (bytes, bytearray)):
            line = line.decode("utf-8")
        yield line


def parse_line(line: str, lineno: int) -> RawRecord | None:
    line = line.rstrip("\r\n")
    if not line.strip() or line.startswith("#"):
        return None
    cols = line.split("\t")
    if len(cols) != 4:
        raise MalformedLineError(lineno, f"expected 4 tab-separated columns, got {len(cols)}")
    user, item, tag, ts = (c.strip() for c in cols)
    for name, value in (("user", user), ("item", item), ("tag", tag)):
        if not value:
            raise MalformedLineError(lineno, f"empty {name} label")
    try:
        timestamp = int(ts, 10)
    except ValueError:
        raise MalformedLineError(lineno, f"unparseable timestamp {ts!r}") from None
    if timestamp < 0:
        raise MalformedLineError(lineno, f"negative timestamp {timestamp}")
    return RawRecord(user, item, tag, timestamp, lineno)


def parse_trace(
    stream: IO | bytes | str,
    fmt: str = "tsv",
    *,
    strict: bool = True,
    skipped: list[MalformedLineError] | None = None,
) -> list[RawRecord]:
    """Parse a trace into raw records.

    In strict mode the first malformed line raises :class:`MalformedLineError`.
    Otherwise bad lines are skipped and, when ``skipped`` is given, the
    corresponding errors are appended to it.
    """
    if fmt != "tsv":
        raise ConfigError(f"unsupported trace format {fmt!r}")
    records = []
    for lineno, line in enumerate(_lines(stream), start=1):
        try:
            rec = parse_line(line, lineno)
        except MalformedLineError as err:
            if strict:
                raise
            if skipped is not None:
                skipped.append(err)
            continue
        if rec is not None:
            records.append(rec)
    return records


def format_assignment(a: TagAssignment) -> str:
    return f"{a.user}\t{a.item}\t{a.tag}\t{a.timestamp}\n"


def write_trace(assignments: Iterable[TagAssignment], out: IO[str], header: Sequence[str] = ()) -> None:
    for line in header:
        out.write(f"# {line}\n")
    for a in assignments:
        out.write(format_assignment(a))


@dataclass(frozen=True)
class CleaningConfig:
    reserved_tags: frozenset[str] = DEFAULT_RESERVED_TAGS
    burst_count: int = 3000
    burst_window: int = 300
    min_timestamp: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "reserved_tags", frozenset(self.reserved_tags))
        if self.burst_count < 1:
            raise ConfigError("burst_count must be >= 1")
        if self.burst_window <= 0:
            raise ConfigError("burst_window must be > 0")


@dataclass
class CleaningReport:
    records_in: int = 0
    users_in: int = 0
    users_removed_reserved: int = 0
    users_removed_robot: int = 0
    records_dropped_timestamp: int = 0
    assignments_removed: int = 0
    removed_users: list[str] = field(default_factory=list)

    @property
    def users_removed(self) -> int:
        return self.users_removed_reserved + self.users_removed_robot

    @property
    def fraction_users_removed(self) -> float:
        return self.users_removed / self.users_in if self.users_in else 0.0

    @property
    def fraction_assignments_removed(self) -> float:
        return self.assignments_removed / self.records_in if self.records_in else 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["fraction_users_removed"] = self.fraction_users_removed
        d["fraction_assignments_removed"] = self.fraction_assignments_removed
        return d


def _max_in_window(timestamps: Sequence[int], window: int) -> int:
    """Largest number of events inside any half-open window [s, s + window)."""
    ts = np.sort(np.asarray(timestamps, dtype=np.int64))
    ends = np.searchsorted(ts, ts + window, side="left")
    return int((ends - np.arange(len(ts))).max()) if len(ts) else 0


def is_robot(timestamps: Sequence[int], config: CleaningConfig) -> bool:
    if len(timestamps) < config.burst_count:
        return False
    return _max_in_window(timestamps, config.burst_window) >= config.burst_count


def clean(
    records: Iterable[RawRecord | TagAssignment],
    config: CleaningConfig | None = None,
) -> tuple[list[TagAssignment], CleaningReport]:
    """Apply the cleaning rules in order: timestamp floor, reserved-tag-only
    users, robot users.

    Accepts raw records or assignments (so cleaning can be re-applied to its
    own output) and preserves input order.
    """
    config = config or CleaningConfig()
    rows = [r.to_assignment() if isinstance(r, RawRecord) else TagAssignment(*r) for r in records]
    report = CleaningReport(records_in=len(rows), users_in=len({a.user for a in rows}))

    if config.min_timestamp is not None:
        kept = [a for a in rows if a.timestamp >= config.min_timestamp]
        report.records_dropped_timestamp = len(rows) - len(kept)
        rows = kept

    vocab: dict[str, set[str]] = defaultdict(set)
    times: dict[str, list[int]] = defaultdict(list)
    for a in rows:
        vocab[a.user].add(a.tag)
        times[a.user].append(a.timestamp)

    removed: dict[str, str] = {}
    for user in sorted(vocab):
        if vocab[user] <= config.reserved_tags:
            removed[user] = "reserved"
    for user in sorted(times):
        if user not in removed and is_robot(times[user], config):
            removed[user] = "robot"

    report.users_removed_reserved = sum(1 for why in removed.values() if why == "reserved")
    report.users_removed_robot = sum(1 for why in removed.values() if why == "robot")
    report.removed_users = sorted(removed)
    out = [a for a in rows if a.user not in removed]
    report.assignments_removed = len(rows) - len(out)
    return out, report
