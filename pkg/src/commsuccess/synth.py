"""Seeded synthetic communities with planted behavioural parameters.

Every community is generated from its own child of a single
``numpy.random.SeedSequence``; nothing reads the wall clock. Events use the
same dump format that :mod:`commsuccess.ingest` reads.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from commsuccess.ingest import COMMENT, DAY, POST, Event, write_dump

EPOCH_2014 = 1388534400  # 2014-01-01T00:00:00Z

# Words the default lexicon knows about, so category features are not all zero.
_LEXICON_WORDS = [
    "we", "us", "our", "ours", "i", "me", "my", "you", "your", "they", "them", "their",
    "love", "great", "good", "happy", "thanks", "fun", "cool", "best",
    "hate", "bad", "awful", "sad", "wrong", "stupid", "annoying", "fail",
    "the", "a", "and", "to", "of", "is", "it", "that", "this", "for",
]


@dataclass(frozen=True)
class SynthParams:
    """Planted parameters of one synthetic community.

    ``concentration`` is the Dirichlet shape of per-member activity shares:
    small values hand nearly all activity to one member. ``churn`` is the
    monthly leave probability of an active member, ``lifetime_months`` the
    time after creation when all activity stops, and ``late_arrival_factor``
    scales the arrival rate after the qualification period.
    """

    community: str = "synth"
    seed: int = 0
    start: int = EPOCH_2014
    n_members: int | None = None
    arrival_rate: float = 1.0
    late_arrival_factor: float = 1.0
    concentration: float = 1.0
    activity_rate: float = 4.0
    post_fraction: float = 0.2
    reply_prob: float = 0.3
    churn: float = 0.3
    lifetime_months: float = 28.0
    horizon_days: float = 840.0
    vocab_size: int = 400
    vocab_skew: float = 1.1
    vocab_offset: int = 0
    mean_tokens: float = 8.0
    score_mean: float = 3.0
    existing_user_prob: float = 0.0

    def __post_init__(self):
        for name in ("post_fraction", "reply_prob", "churn", "existing_user_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        for name in ("arrival_rate", "concentration", "activity_rate", "lifetime_months", "horizon_days"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.n_members is not None and self.n_members < 1:
            raise ValueError("n_members must be >= 1")


class UserPool:
    """Shared user registry for corpus mode: reuses users who already acted earlier."""

    def __init__(self):
        self.names: list[str] = []
        self.first: list[float] = []
        self._next = 0

    def new(self, t: float) -> str:
        name = f"user{self._next:06d}"
        self._next += 1
        self.names.append(name)
        self.first.append(t)
        return name

    def existing(self, t: float, rng: np.random.Generator, exclude: set[str], tries: int = 8) -> str | None:
        if not self.names:
            return None
        for _ in range(tries):
            i = int(rng.integers(len(self.names)))
            if self.first[i] < t and self.names[i] not in exclude:
                return self.names[i]
        return None


def _vocabulary(size: int) -> list[str]:
    extra = max(size - len(_LEXICON_WORDS), 0)
    return _LEXICON_WORDS[:size] + [f"w{i}" for i in range(extra)]


def _token_probs(p: SynthParams) -> np.ndarray:
    ranks = np.arange(1, p.vocab_size + 1, dtype=np.float64)
    probs = ranks ** -p.vocab_skew
    probs = np.roll(probs, p.vocab_offset % p.vocab_size)
    return probs / probs.sum()


def _arrivals(p: SynthParams, rng: np.random.Generator) -> np.ndarray:
    """Arrival offsets in days; the founder arrives at 0."""
    end = min(p.lifetime_months * 30.0, p.horizon_days)
    times = [0.0]
    t = 0.0
    cap = p.n_members if p.n_members is not None else math.inf
    while len(times) < cap:
        rate = p.arrival_rate if t < 90.0 else p.arrival_rate * p.late_arrival_factor
        if rate <= 0:
            break
        t += rng.exponential(1.0 / rate)
        if t >= end:
            break
        times.append(t)
    return np.array(times)


def generate(
    params: SynthParams,
    pool: UserPool | None = None,
    rng: np.random.Generator | None = None,
) -> list[Event]:
    """Generate one community's posts and comments, sorted by time.

    Args:
        params: planted parameters.
        pool: shared users for corpus mode; ``None`` names members
            ``<community>_m<j>``.
        rng: generator to draw from; defaults to one seeded by ``params.seed``.
    """
    p = params
    rng = rng if rng is not None else np.random.default_rng(p.seed)
    end_day = min(p.lifetime_months * 30.0, p.horizon_days)
    arrive = _arrivals(p, rng)
    n = arrive.size

    shares = rng.dirichlet(np.full(n, p.concentration)) if n > 1 else np.ones(1)
    rates = p.activity_rate * n * shares / 30.0  # events per day
    if p.churn > 0:
        months_active = rng.geometric(p.churn, size=n).astype(np.float64)
    else:
        months_active = np.full(n, np.inf)
    leave = np.minimum(arrive + months_active * 30.0, end_day)

    names: list[str] = []
    taken: set[str] = set()
    for j in range(n):
        t_abs = p.start + arrive[j] * DAY
        name = None
        if pool is not None:
            if rng.random() < p.existing_user_prob:
                name = pool.existing(t_abs, rng, taken)
            if name is None:
                name = pool.new(t_abs)
        else:
            name = f"{p.community}_m{j}"
        taken.add(name)
        names.append(name)

    # (day offset, member index, arrival flag); each member's first act is its
    # arrival, and members other than the founder arrive by commenting
    acts: list[tuple[float, int, bool]] = [(float(arrive[j]), j, True) for j in range(n)]
    span = np.maximum(leave - arrive, 0.0)
    counts = rng.poisson(rates * span)
    for j in np.flatnonzero(counts):
        for t in rng.uniform(arrive[j], leave[j], size=counts[j]):
            acts.append((float(t), int(j), False))
    acts.sort()

    kinds_post = rng.random(len(acts)) < p.post_fraction
    lengths = 1 + rng.poisson(p.mean_tokens, size=len(acts))
    title_len = 1 + rng.poisson(4.0, size=len(acts))
    vocab = _vocabulary(p.vocab_size)
    tok = rng.choice(p.vocab_size, size=int(lengths.sum() + title_len.sum()), p=_token_probs(p)).tolist()
    scores = rng.poisson(p.score_mean, size=len(acts)) - rng.poisson(1.0, size=len(acts))
    reply_draw = rng.random(len(acts))
    pick_draw = rng.random(len(acts))

    events: list[Event] = []
    recent: list[tuple[str, int]] = []  # (event_id, member)
    last_own: dict[int, str] = {}
    last_post: str | None = None
    pos = 0
    for i, (day, j, arrival) in enumerate(acts):
        created = int(p.start + day * DAY)
        body = " ".join(vocab[t] for t in tok[pos: pos + lengths[i]])
        pos += lengths[i]
        is_post = i == 0 or last_post is None or (kinds_post[i] and not arrival)
        eid_num = f"{p.community}x{i:06d}"
        if is_post:
            title = " ".join(vocab[t] for t in tok[pos: pos + title_len[i]])
            pos += title_len[i]
            ev = Event(f"t3_{eid_num}", POST, names[j], p.community, created,
                       body=body, score=int(scores[i]), title=title)
            last_post = ev.event_id
        else:
            parent = None
            if reply_draw[i] < p.reply_prob:
                others = [eid for eid, m in recent if m != j]
                if others:
                    parent = others[int(pick_draw[i] * len(others))]
            if parent is None:
                parent = last_own.get(j, last_post)
            ev = Event(f"t1_{eid_num}", COMMENT, names[j], p.community, created,
                       body=body, score=int(scores[i]), parent_id=parent, link_id=last_post)
        events.append(ev)
        last_own[j] = ev.event_id
        recent.append((ev.event_id, j))
        if len(recent) > 50:
            recent.pop(0)
    return events


@dataclass(frozen=True)
class PopulationSpec:
    """Ranges from which corpus mode draws per-community parameters."""

    arrival_rate: tuple[float, float] = (0.08, 2.5)  # log-uniform
    late_arrival_factor: float = 0.25
    concentration: tuple[float, float] = (0.6, 3.0)  # log-uniform
    activity_rate: tuple[float, float] = (1.0, 4.0)  # log-uniform
    post_fraction: tuple[float, float] = (0.25, 0.35)
    reply_prob: tuple[float, float] = (0.0, 0.6)
    churn: tuple[float, float] = (0.2, 0.7)
    long_lived_prob: float = 0.5
    short_lifetime: tuple[float, float] = (14.0, 26.0)
    existing_user_prob: tuple[float, float] = (0.2, 0.8)
    creation_days: float = 360.0
    mean_tokens: float = 6.0


def _loguniform(rng, lo, hi):
    return float(math.exp(rng.uniform(math.log(lo), math.log(hi))))


def draw_params(name: str, rng: np.random.Generator, spec: PopulationSpec, start: int) -> SynthParams:
    lifetime = 28.0 if rng.random() < spec.long_lived_prob else float(rng.uniform(*spec.short_lifetime))
    return SynthParams(
        community=name,
        seed=int(rng.integers(2**31)),
        start=start + int(rng.uniform(0, spec.creation_days) * DAY),
        arrival_rate=_loguniform(rng, *spec.arrival_rate),
        late_arrival_factor=spec.late_arrival_factor,
        concentration=_loguniform(rng, *spec.concentration),
        activity_rate=_loguniform(rng, *spec.activity_rate),
        post_fraction=float(rng.uniform(*spec.post_fraction)),
        reply_prob=float(rng.uniform(*spec.reply_prob)),
        churn=float(rng.uniform(*spec.churn)),
        lifetime_months=lifetime,
        vocab_offset=int(rng.integers(0, 400)),
        mean_tokens=spec.mean_tokens,
        existing_user_prob=float(rng.uniform(*spec.existing_user_prob)),
    )


@dataclass
class SynthCorpus:
    events: list[Event]
    params: dict[str, SynthParams] = field(default_factory=dict)

    def planted(self) -> dict[str, dict]:
        return {c: asdict(p) for c, p in self.params.items()}

    def write(self, out_dir: str | Path, compress: bool = False) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        ext = ".ndjson.gz" if compress else ".ndjson"
        posts, comments = out / f"posts{ext}", out / f"comments{ext}"
        write_dump(self.events, posts, POST)
        write_dump(self.events, comments, COMMENT)
        return posts, comments


def generate_corpus(
    n_communities: int,
    seed: int = 0,
    spec: PopulationSpec | None = None,
    start: int = EPOCH_2014,
    customize: Callable[[SynthParams], SynthParams] | None = None,
) -> SynthCorpus:
    """Population of communities sharing one user pool, generated in creation order."""
    spec = spec or PopulationSpec()
    root = np.random.SeedSequence(seed)
    param_rng = np.random.default_rng(root.spawn(1)[0])
    params = [draw_params(f"c{i:04d}", param_rng, spec, start) for i in range(n_communities)]
    if customize is not None:
        params = [customize(p) for p in params]
    children = root.spawn(n_communities)
    order = sorted(range(n_communities), key=lambda i: (params[i].start, params[i].community))
    pool = UserPool()
    events: list[Event] = []
    for i in order:
        events.extend(generate(params[i], pool, np.random.default_rng(children[i])))
    return SynthCorpus(events, {p.community: p for p in params})


__all__ = [
    "EPOCH_2014", "PopulationSpec", "SynthCorpus", "SynthParams", "UserPool",
    "draw_params", "generate", "generate_corpus",
]
