"""Linguistic-style features: lengths, vocabulary rate and lexicon categories."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from commsuccess.features.vector import FeatureVector
from commsuccess.ingest import EarlyWindow, Event

_URL = re.compile(r"(?:https?://|ftp://|www\.)\S+", re.IGNORECASE)
_SPLIT = re.compile(r"[\W_]+")


def tokenize(text: str) -> list[str]:
    """Lowercase, strip URLs, split on anything that is not a letter or digit."""
    if not text:
        return []
    return [t for t in _SPLIT.split(_URL.sub(" ", text).lower()) if t]


@dataclass(frozen=True)
class CategoryLexicon:
    categories: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        for name, pats in self.categories.items():
            if not pats or any(not p or p == "*" for p in pats):
                raise ValueError(f"category {name!r} has an empty pattern")

    def __bool__(self) -> bool:
        return bool(self.categories)

    @property
    def names(self) -> list[str]:
        return list(self.categories)

    def matcher(self, name: str):
        pats = self.categories[name]
        exact = {p for p in pats if not p.endswith("*")}
        prefixes = tuple(p[:-1] for p in pats if p.endswith("*"))
        return lambda tok: tok in exact or tok.startswith(prefixes)

    def fractions(self, tokens: list[str]) -> dict[str, float]:
        if not tokens:
            return {name: 0.0 for name in self.categories}
        out = {}
        for name in self.categories:
            match = self.matcher(name)
            out[name] = sum(1 for t in tokens if match(t)) / len(tokens)
        return out

    @classmethod
    def parse(cls, text: str) -> "CategoryLexicon":
        cats: dict[str, tuple[str, ...]] = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            name, sep, rest = line.partition(":")
            name = name.strip()
            if not sep or not name:
                raise ValueError(f"lexicon line {lineno}: expected 'category: pat1, pat2'")
            if name in cats:
                raise ValueError(f"lexicon line {lineno}: duplicate category {name!r}")
            pats = tuple(p.strip().lower() for p in rest.split(",") if p.strip())
            cats[name] = pats
        return cls(cats)

    @classmethod
    def load(cls, path: str | Path) -> "CategoryLexicon":
        return cls.parse(Path(path).read_text(encoding="utf-8"))

    @classmethod
    def default(cls) -> "CategoryLexicon":
        text = resources.files("commsuccess.features").joinpath("default_lexicon.txt").read_text("utf-8")
        return cls.parse(text)


def _median_len(token_lists: list[list[str]]) -> tuple[float, bool]:
    if not token_lists:
        return 0.0, True
    return float(np.median([len(t) for t in token_lists])), False


def linguistic_features(w: EarlyWindow, lex: CategoryLexicon | None = None) -> FeatureVector:
    fv = FeatureVector(w.community, w.k)
    fam = "linguistic"
    posts: list[Event] = w.posts
    comments: list[Event] = w.comments
    post_body = [tokenize(p.body) for p in posts]
    titles = [tokenize(p.title or "") for p in posts]
    comment_body = [tokenize(c.body) for c in comments]

    for name, lists in (
        ("median_post_length", post_body),
        ("median_title_length", titles),
        ("median_comment_length", comment_body),
    ):
        value, missing = _median_len(lists)
        fv.add(name, value, fam, flagged=missing)

    vocab = set()
    for lists in (post_body, titles, comment_body):
        for toks in lists:
            vocab.update(toks)
    n_docs = len(posts) + len(comments)
    fv.add("vocab_rate", len(vocab) / n_docs if n_docs else 0.0, fam, flagged=n_docs == 0)

    if lex:
        post_tokens = [t for lists in (titles, post_body) for toks in lists for t in toks]
        comment_tokens = [t for toks in comment_body for t in toks]
        for prefix, toks in (("post", post_tokens), ("comment", comment_tokens)):
            for cat, frac in lex.fractions(toks).items():
                fv.add(f"{prefix}_{cat}", frac, fam, flagged=not toks)
    return fv
