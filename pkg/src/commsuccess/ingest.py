"""Event dumps, community timelines, early windows and monthly partitions.

Input is the public Reddit NDJSON dump layout: one file of posts
(submissions) and one of comments, one JSON object per line.  Post ids are
stored with their ``t3_`` fullname prefix and comment ids with ``t1_`` so that
a comment's ``parent_id`` resolves directly against ``Event.event_id``.
"""

from __future__ import annotations

import bisect
import gzip
import io
import json
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator, NamedTuple

from commsuccess.errors import ConfigurationError, DataError

log = logging.getLogger(__name__)

SENTINEL_AUTHOR = "[deleted]"
DAY = 86400.0
MONTH_DAYS = 30
QUALIFICATION_DAYS = 90.0

POST = "post"
COMMENT = "comment"

_POST_FIELDS = ("id", "author", "subreddit", "created_utc", "title", "selftext", "score")
_COMMENT_FIELDS = (
    "id", "author", "subreddit", "created_utc", "parent_id", "link_id", "body", "score",
)
FORMATS = {"posts": POST, "comments": COMMENT}


@dataclass(frozen=True, slots=True)
class Event:
    event_id: str
    kind: str
    author: str
    community: str
    created_at: int
    body: str = ""
    score: int = 0
    title: str | None = None
    parent_id: str | None = None
    link_id: str | None = None

    def __post_init__(self):
        if self.kind == POST:
            if self.parent_id is not None or self.title is None:
                raise ValueError(f"post {self.event_id} must have a title and no parent")
        elif self.kind == COMMENT:
            if self.parent_id is None and self.link_id is None:
                raise ValueError(f"comment {self.event_id} has no parent")
        else:
            raise ValueError(f"unknown event kind {self.kind!r}")
        if self.created_at <= 0:
            raise ValueError(f"event {self.event_id} has non-positive timestamp")

    @property
    def is_sentinel(self) -> bool:
        return self.author == SENTINEL_AUTHOR

    @property
    def parent(self) -> str | None:
        """Reply target; falls back to the root post when parent_id is missing."""
        return self.parent_id if self.parent_id is not None else self.link_id

    @property
    def text(self) -> str:
        if self.title:
            return f"{self.title}\n{self.body}"
        return self.body

    def to_dump(self) -> dict:
        """Inverse of :func:`record_to_event` (dump-format record)."""
        rec = {
            "id": self.event_id[3:] if self.event_id[:3] in ("t1_", "t3_") else self.event_id,
            "author": self.author,
            "subreddit": self.community,
            "created_utc": self.created_at,
            "score": self.score,
        }
        if self.kind == POST:
            rec["title"] = self.title
            rec["selftext"] = self.body
        else:
            rec["parent_id"] = self.parent_id
            rec["link_id"] = self.link_id
            rec["body"] = self.body
        return rec


def _fullname(raw_id: str, prefix: str) -> str:
    return raw_id if raw_id.startswith(prefix) else prefix + raw_id


def _as_timestamp(value) -> int:
    if isinstance(value, bool):
        raise ValueError("boolean timestamp")
    if isinstance(value, (int, float)):
        return int(value)
    return int(float(str(value)))


def record_to_event(rec: dict, kind: str) -> Event:
    """Map one dump record onto an :class:`Event`. Raises on missing fields."""
    required = _POST_FIELDS if kind == POST else _COMMENT_FIELDS
    missing = [f for f in required if f not in rec]
    if missing:
        raise KeyError(f"missing fields {missing}")
    author = rec["author"] if rec["author"] is not None else SENTINEL_AUTHOR
    common = dict(
        author=str(author),
        community=str(rec["subreddit"]),
        created_at=_as_timestamp(rec["created_utc"]),
        score=int(rec["score"]) if rec["score"] is not None else 0,
    )
    if kind == POST:
        return Event(
            event_id=_fullname(str(rec["id"]), "t3_"),
            kind=POST,
            title=rec["title"] or "",
            body=rec["selftext"] or "",
            **common,
        )
    return Event(
        event_id=_fullname(str(rec["id"]), "t1_"),
        kind=COMMENT,
        parent_id=rec["parent_id"],
        link_id=rec["link_id"],
        body=rec["body"] or "",
        **common,
    )


def stream_events(
    source: IO[bytes] | IO[str] | Iterable,
    fmt: str,
    diagnostics: Counter | None = None,
) -> Iterator[Event]:
    """Yield events from an NDJSON dump stream in file order.

    Malformed lines (bad JSON, bad UTF-8, missing fields, invariant
    violations) are skipped and counted under ``diagnostics["skipped"]``.

    Args:
        source: binary or text stream, or any iterable of lines.
        fmt: ``"posts"`` or ``"comments"``.
        diagnostics: optional counter updated in place.
    """
    if fmt not in FORMATS:
        raise ConfigurationError(f"unknown dump format {fmt!r}; expected one of {sorted(FORMATS)}")
    kind = FORMATS[fmt]
    diag = diagnostics if diagnostics is not None else Counter()
    try:
        for line in source:
            if isinstance(line, bytes):
                try:
                    line = line.decode("utf-8")
                except UnicodeDecodeError:
                    diag["skipped"] += 1
                    continue
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                if not isinstance(rec, dict):
                    raise ValueError("record is not an object")
                event = record_to_event(rec, kind)
            except (ValueError, KeyError, TypeError):
                diag["skipped"] += 1
                continue
            diag["read"] += 1
            yield event
    except OSError as exc:
        raise DataError(f"cannot read dump: {exc}") from exc


def open_dump(path: str | Path) -> IO[bytes]:
    """Open a dump file, decompressing by extension (.gz, .zst/.zstd, plain)."""
    path = Path(path)
    try:
        if path.suffix == ".gz":
            return gzip.open(path, "rb")
        if path.suffix in (".zst", ".zstd"):
            try:
                import zstandard
            except ImportError as exc:
                raise ConfigurationError("reading .zst dumps requires the 'zstandard' package") from exc
            fh = open(path, "rb")
            reader = zstandard.ZstdDecompressor(max_window_size=2**31).stream_reader(fh, closefd=True)
            return io.BufferedReader(reader)
        return open(path, "rb")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc


def read_dump(path: str | Path, fmt: str, diagnostics: Counter | None = None) -> list[Event]:
    with open_dump(path) as fh:
        return list(stream_events(fh, fmt, diagnostics))


def write_dump(events: Iterable[Event], path: str | Path, kind: str) -> int:
    """Write events of one kind as NDJSON. Returns the number of lines written."""
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    n = 0
    with opener(path, "wt", encoding="utf-8") as fh:
        for ev in events:
            if ev.kind != kind:
                continue
            fh.write(json.dumps(ev.to_dump(), ensure_ascii=False, sort_keys=True))
            fh.write("\n")
            n += 1
    return n


def _sort_key(ev: Event):
    return (ev.created_at, ev.event_id)


def dedupe(events: Iterable[Event], diagnostics: Counter | None = None) -> list[Event]:
    """Drop repeated event ids, keeping the first occurrence."""
    seen: set[str] = set()
    out = []
    for ev in events:
        if ev.event_id in seen:
            if diagnostics is not None:
                diagnostics["duplicates"] += 1
            continue
        seen.add(ev.event_id)
        out.append(ev)
    return out


@dataclass(frozen=True)
class CommunityTimeline:
    community: str
    events: tuple[Event, ...]
    times: tuple[int, ...] = field(repr=False, default=())

    def __post_init__(self):
        if not self.events:
            raise ValueError("timeline must be non-empty")
        object.__setattr__(self, "times", tuple(ev.created_at for ev in self.events))

    @property
    def created_at(self) -> int:
        return self.events[0].created_at

    @classmethod
    def from_events(cls, community: str, events: Iterable[Event]) -> "CommunityTimeline":
        return cls(community, tuple(sorted(events, key=_sort_key)))

    def between(self, start: float, end: float) -> tuple[Event, ...]:
        """Events with ``start <= created_at < end``."""
        lo = bisect.bisect_left(self.times, start)
        hi = bisect.bisect_left(self.times, end)
        return self.events[lo:hi]


def build_timelines(
    events: Iterable[Event], diagnostics: Counter | None = None
) -> dict[str, CommunityTimeline]:
    by_comm: dict[str, list[Event]] = defaultdict(list)
    for ev in dedupe(events, diagnostics):
        by_comm[ev.community].append(ev)
    return {c: CommunityTimeline.from_events(c, evs) for c, evs in sorted(by_comm.items())}


@dataclass(frozen=True)
class EarlyWindow:
    """A community's events from creation until its k-th distinct member acts."""

    community: str
    k: int
    created_at: int
    t_k: int
    members: tuple[str, ...]
    join_times: dict[str, int]
    events: tuple[Event, ...]

    @property
    def days_to_k(self) -> float:
        return (self.t_k - self.created_at) / DAY

    @property
    def posts(self) -> list[Event]:
        return [ev for ev in self.events if ev.kind == POST]

    @property
    def comments(self) -> list[Event]:
        return [ev for ev in self.events if ev.kind == COMMENT]


def extract_early_window(
    timeline: CommunityTimeline, k: int, qualification_days: float = QUALIFICATION_DAYS
) -> EarlyWindow | None:
    """Truncate a timeline at the first event of its k-th distinct author.

    Returns ``None`` when fewer than ``k`` non-sentinel authors act within
    ``qualification_days`` of the community's first event.
    """
    if k < 1:
        raise ConfigurationError("k must be >= 1")
    created = timeline.created_at
    deadline = created + qualification_days * DAY
    joins: dict[str, int] = {}
    for idx, ev in enumerate(timeline.events):
        if ev.created_at > deadline:
            return None
        if ev.is_sentinel or ev.author in joins:
            continue
        joins[ev.author] = ev.created_at
        if len(joins) == k:
            return EarlyWindow(
                community=timeline.community,
                k=k,
                created_at=created,
                t_k=ev.created_at,
                members=tuple(joins),
                join_times=joins,
                events=timeline.events[: idx + 1],
            )
    return None


@dataclass(frozen=True)
class MonthlyActivity:
    month: int
    posts_count: int
    comments_count: int
    posters: frozenset[str]
    commenters: frozenset[str]

    @property
    def active_users(self) -> frozenset[str]:
        return self.posters | self.commenters

    @property
    def total(self) -> int:
        return self.posts_count + self.comments_count


def activity_for(month: int, events: Iterable[Event]) -> MonthlyActivity:
    posts = comments = 0
    posters: set[str] = set()
    commenters: set[str] = set()
    for ev in events:
        if ev.kind == POST:
            posts += 1
            if not ev.is_sentinel:
                posters.add(ev.author)
        else:
            comments += 1
            if not ev.is_sentinel:
                commenters.add(ev.author)
    return MonthlyActivity(month, posts, comments, frozenset(posters), frozenset(commenters))


def monthly_partition(timeline: CommunityTimeline, t_k: float, months: int) -> list[MonthlyActivity]:
    """Split activity after ``t_k`` into consecutive half-open 30-day months."""
    if months < 1:
        raise ConfigurationError("months must be >= 1")
    span = MONTH_DAYS * DAY
    return [
        activity_for(i, timeline.between(t_k + (i - 1) * span, t_k + i * span))
        for i in range(1, months + 1)
    ]


class Activity(NamedTuple):
    community: str
    kind: str
    score: int
    created_at: int


class UserHistoryIndex:
    """Per-user, time-ordered activity logs across all communities.

    Built once and then read-only. Sentinel authors are not indexed.
    """

    def __init__(self, logs: dict[str, list[Activity]]):
        self._logs = {u: sorted(acts, key=lambda a: (a.created_at, a.community, a.kind))
                      for u, acts in logs.items()}
        self._times = {u: [a.created_at for a in acts] for u, acts in self._logs.items()}

    def __contains__(self, user: str) -> bool:
        return user in self._logs

    def __len__(self) -> int:
        return len(self._logs)

    def users(self) -> list[str]:
        return sorted(self._logs)

    def first_seen(self, user: str) -> int | None:
        times = self._times.get(user)
        return times[0] if times else None

    def activities(self, user: str, start: float, end: float) -> list[Activity]:
        """Activities of ``user`` with ``start <= created_at < end``."""
        times = self._times.get(user)
        if not times:
            return []
        lo = bisect.bisect_left(times, start)
        hi = bisect.bisect_left(times, end)
        return self._logs[user][lo:hi]

    def log(self, user: str) -> list[Activity]:
        return list(self._logs.get(user, ()))


def build_user_history(events: Iterable[Event]) -> UserHistoryIndex:
    logs: dict[str, list[Activity]] = defaultdict(list)
    for ev in dedupe(events):
        if ev.is_sentinel:
            continue
        logs[ev.author].append(Activity(ev.community, ev.kind, ev.score, ev.created_at))
    return UserHistoryIndex(dict(logs))


@dataclass
class Corpus:
    """Timelines plus the shared user-history index."""

    timelines: dict[str, CommunityTimeline]
    history: UserHistoryIndex
    diagnostics: Counter = field(default_factory=Counter)

    @classmethod
    def from_events(cls, events: Iterable[Event]) -> "Corpus":
        diag: Counter = Counter()
        events = dedupe(events, diag)
        return cls(build_timelines(events), build_user_history(events), diag)

    def events(self) -> Iterator[Event]:
        for tl in self.timelines.values():
            yield from tl.events


# JSON checkpoint schemas -------------------------------------------------

EVENT_SCHEMA = {
    "type": "object",
    "required": ["event_id", "kind", "author", "community", "created_at", "body", "score"],
    "properties": {
        "event_id": {"type": "string"},
        "kind": {"enum": [POST, COMMENT]},
        "author": {"type": "string"},
        "community": {"type": "string"},
        "created_at": {"type": "integer", "exclusiveMinimum": 0},
        "body": {"type": "string"},
        "score": {"type": "integer"},
        "title": {"type": ["string", "null"]},
        "parent_id": {"type": ["string", "null"]},
        "link_id": {"type": ["string", "null"]},
    },
}

EARLY_WINDOW_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "EarlyWindow",
    "type": "object",
    "required": ["community", "k", "created_at", "t_k", "days_to_k", "members", "join_times", "events"],
    "properties": {
        "community": {"type": "string"},
        "k": {"type": "integer", "minimum": 1},
        "created_at": {"type": "integer"},
        "t_k": {"type": "integer"},
        "days_to_k": {"type": "number", "minimum": 0},
        "members": {"type": "array", "items": {"type": "string"}},
        "join_times": {"type": "object", "additionalProperties": {"type": "integer"}},
        "events": {"type": "array", "items": EVENT_SCHEMA},
    },
}

MONTHLY_ACTIVITY_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "MonthlyActivity",
    "type": "object",
    "required": ["month", "posts_count", "comments_count", "active_users", "posters", "commenters"],
    "properties": {
        "month": {"type": "integer", "minimum": 1},
        "posts_count": {"type": "integer", "minimum": 0},
        "comments_count": {"type": "integer", "minimum": 0},
        "active_users": {"type": "array", "items": {"type": "string"}},
        "posters": {"type": "array", "items": {"type": "string"}},
        "commenters": {"type": "array", "items": {"type": "string"}},
    },
}


def event_to_dict(ev: Event) -> dict:
    return {
        "event_id": ev.event_id, "kind": ev.kind, "author": ev.author,
        "community": ev.community, "created_at": ev.created_at, "body": ev.body,
        "score": ev.score, "title": ev.title, "parent_id": ev.parent_id, "link_id": ev.link_id,
    }


def event_from_dict(d: dict) -> Event:
    return Event(**d)


def window_to_dict(w: EarlyWindow) -> dict:
    return {
        "community": w.community,
        "k": w.k,
        "created_at": w.created_at,
        "t_k": w.t_k,
        "days_to_k": w.days_to_k,
        "members": list(w.members),
        "join_times": dict(w.join_times),
        "events": [event_to_dict(ev) for ev in w.events],
    }


def window_from_dict(d: dict) -> EarlyWindow:
    return EarlyWindow(
        community=d["community"],
        k=d["k"],
        created_at=d["created_at"],
        t_k=d["t_k"],
        members=tuple(d["members"]),
        join_times=dict(d["join_times"]),
        events=tuple(event_from_dict(e) for e in d["events"]),
    )


def monthly_to_dict(m: MonthlyActivity) -> dict:
    return {
        "month": m.month,
        "posts_count": m.posts_count,
        "comments_count": m.comments_count,
        "active_users": sorted(m.active_users),
        "posters": sorted(m.posters),
        "commenters": sorted(m.commenters),
    }


def monthly_from_dict(d: dict) -> MonthlyActivity:
    return MonthlyActivity(
        d["month"], d["posts_count"], d["comments_count"],
        frozenset(d["posters"]), frozenset(d["commenters"]),
    )
