"""Parent-community genealogy features and unigram language distance."""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from typing import Iterable, Mapping, Sequence

import networkx as nx
import numpy as np

from commsuccess.features.activity import gini
from commsuccess.features.graph import triangles_and_triples
from commsuccess.features.text import tokenize
from commsuccess.features.vector import FeatureVector
from commsuccess.ingest import DAY, CommunityTimeline, EarlyWindow, UserHistoryIndex

PRIOR_DAYS = 30
MIN_SHARED_MEMBERS = 2


def find_parents(w: EarlyWindow, h: UserHistoryIndex, prior_days: float = PRIOR_DAYS) -> dict[str, set[str]]:
    """Map each other community to the early members active there in the month before creation."""
    start, end = w.created_at - prior_days * DAY, w.created_at
    parents: dict[str, set[str]] = defaultdict(set)
    for m in w.members:
        for act in h.activities(m, start, end):
            if act.community != w.community:
                parents[act.community].add(m)
    return {p: parents[p] for p in sorted(parents)}


def build_genealogy(parents: Mapping[str, set[str]]) -> nx.Graph:
    g = nx.Graph()
    for p, members in parents.items():
        g.add_node(p, n_members=len(members))
    names = list(parents)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            if len(parents[a] & parents[b]) >= MIN_SHARED_MEMBERS:
                g.add_edge(a, b)
    return g


def _as_counts(tokens) -> Mapping[str, int]:
    return tokens if isinstance(tokens, Mapping) else Counter(tokens)


def cross_entropy(p_tokens, q_tokens, vocab: Iterable[str] | None = None) -> float:
    """H(P, Q) in nats: P empirical over ``p_tokens``, Q add-one smoothed over ``vocab``.

    Either argument may be a token sequence or a token -> count mapping.
    ``vocab`` defaults to the union of both token sets.
    """
    p = _as_counts(p_tokens)
    q = _as_counts(q_tokens)
    n_p = sum(p.values())
    if n_p == 0:
        raise ValueError("cross entropy needs a non-empty reference sample")
    v = set(vocab) if vocab is not None else set(q)
    v.update(p)
    denom = sum(q.values()) + len(v)
    return -sum(c / n_p * math.log((q.get(w, 0) + 1) / denom) for w, c in sorted(p.items()))


def parent_features(
    g: nx.Graph,
    focal_tokens: Sequence[str] | Mapping[str, int],
    parent_tokens: Mapping[str, Sequence[str] | Mapping[str, int]],
    parent_sizes: Mapping[str, int],
    community: str = "",
    k: int = 0,
) -> FeatureVector:
    fv = FeatureVector(community, k)
    fam = "parents"
    n = g.number_of_nodes()
    fv.add("has_parents", float(n > 0), fam)
    fv.add("n_parents", n, fam)
    if n == 0:
        for name in (
            "genealogy_density", "genealogy_transitivity", "max_log_parent_size",
            "min_log_parent_size", "std_log_parent_size", "gini_parent_member_counts",
            "median_lang_distance", "max_lang_distance",
        ):
            fv.add(name, 0.0, fam)
        return fv

    if n < 2:
        fv.add("genealogy_density", 0.0, fam, flagged=True)
    else:
        fv.add("genealogy_density", 2 * g.number_of_edges() / (n * (n - 1)), fam)
    tri, triples = triangles_and_triples(g)
    fv.add("genealogy_transitivity", 3 * tri / triples if triples else 0.0, fam, flagged=triples == 0)

    nodes = sorted(g.nodes)
    logs = np.log(np.array([parent_sizes[p] for p in nodes], dtype=np.float64) + 1.0)
    fv.add("max_log_parent_size", logs.max(), fam)
    fv.add("min_log_parent_size", logs.min(), fam)
    fv.add("std_log_parent_size", logs.std(), fam)
    fv.add("gini_parent_member_counts", gini([g.nodes[p]["n_members"] for p in nodes]), fam)

    if focal_tokens:
        dists = [cross_entropy(focal_tokens, parent_tokens.get(p, ())) for p in nodes]
        fv.add("median_lang_distance", np.median(dists), fam)
        fv.add("max_lang_distance", max(dists), fam)
    else:
        fv.add("median_lang_distance", 0.0, fam, flagged=True)
        fv.add("max_lang_distance", 0.0, fam, flagged=True)
    return fv


class ParentContext:
    """Member counts and pooled token counts of communities over the month before a time.

    Results are memoized per ``(community, time)``; every k of one focal
    community asks for the same parent windows.
    """

    def __init__(self, timelines: Mapping[str, CommunityTimeline], prior_days: float = PRIOR_DAYS):
        self.timelines = timelines
        self.prior_days = prior_days
        self._memo: dict[tuple[str, float], tuple[int, Counter]] = {}

    def __call__(self, community: str, created_at: float) -> tuple[int, Counter]:
        key = (community, created_at)
        if key not in self._memo:
            tl = self.timelines.get(community)
            events = tl.between(created_at - self.prior_days * DAY, created_at) if tl else ()
            counts: Counter = Counter()
            for ev in events:
                counts.update(tokenize(ev.text))
            size = len({ev.author for ev in events if not ev.is_sentinel})
            self._memo[key] = (size, counts)
        return self._memo[key]


def window_parent_features(w: EarlyWindow, h: UserHistoryIndex, ctx: ParentContext) -> FeatureVector:
    parents = find_parents(w, h, ctx.prior_days)
    sizes: dict[str, int] = {}
    texts: dict[str, Counter] = {}
    for p in parents:
        sizes[p], texts[p] = ctx(p, w.created_at)
    focal: Counter = Counter()
    for ev in w.events:
        focal.update(tokenize(ev.text))
    return parent_features(build_genealogy(parents), focal, texts, sizes, w.community, w.k)
