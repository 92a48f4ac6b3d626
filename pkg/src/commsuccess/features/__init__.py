"""Early-window feature families and the feature-name manifest."""

from __future__ import annotations

from typing import Mapping

from commsuccess.features.activity import (
    distribution_features,
    gini,
    gini_pairwise,
    volume_speed_features,
)
from commsuccess.features.graph import build_reply_graph, graph_features
from commsuccess.features.parents import ParentContext, cross_entropy, window_parent_features
from commsuccess.features.text import CategoryLexicon, linguistic_features, tokenize
from commsuccess.features.users import user_composition_features
from commsuccess.features.vector import FAMILIES, FeatureVector
from commsuccess.ingest import CommunityTimeline, EarlyWindow, UserHistoryIndex

MANIFEST_VERSION = 1

_FIXED = {
    "volume_speed": [
        "n_posters", "n_commenters", "creation_date", "n_posts", "median_replies_per_post",
        "median_posts_per_user", "median_comments_per_user", "days_to_k",
        "mean_gap_posts_days", "mean_gap_comments_days",
    ],
    "distribution": [
        "gini_posts_per_user", "gini_comments_per_user", "gini_post_gaps", "gini_comment_gaps",
    ],
    "user_composition": [
        "median_prior_post_score", "std_prior_post_score", "median_prior_comment_score",
        "std_prior_comment_score", "median_prior_activity_count", "std_prior_activity_count",
        "median_days_on_site", "fraction_new_users",
    ],
    "linguistic": [
        "median_post_length", "median_title_length", "median_comment_length", "vocab_rate",
    ],
    "social": [
        "transitivity", "avg_clustering", "density", "largest_component_fraction",
        "singleton_fraction", "frac_posts_replied", "frac_comments_replied",
    ],
    "parents": [
        "has_parents", "n_parents", "genealogy_density", "genealogy_transitivity",
        "max_log_parent_size", "min_log_parent_size", "std_log_parent_size",
        "gini_parent_member_counts", "median_lang_distance", "max_lang_distance",
    ],
}

# Names held for externally computed personality scores; never emitted here.
RESERVED = [
    f"{src}_{trait}"
    for src in ("post", "comment")
    for trait in ("extraversion", "conscientiousness", "neuroticism", "agreeableness", "openness")
]


def feature_manifest(lexicon: CategoryLexicon | None = None) -> list[tuple[str, str]]:
    """Ordered ``(feature name, family)`` pairs emitted under ``lexicon``."""
    out = []
    for fam in FAMILIES:
        out.extend((name, fam) for name in _FIXED[fam])
        if fam == "linguistic" and lexicon:
            out.extend((f"{src}_{cat}", fam) for src in ("post", "comment") for cat in lexicon.names)
    return out


def manifest_document(lexicon: CategoryLexicon | None = None) -> dict:
    return {
        "version": MANIFEST_VERSION,
        "features": [{"name": n, "family": f} for n, f in feature_manifest(lexicon)],
        "reserved": RESERVED,
        "lexicon_categories": lexicon.names if lexicon else [],
    }


class FeatureExtractor:
    """All six families for early windows of one corpus, in manifest order."""

    def __init__(
        self,
        history: UserHistoryIndex,
        timelines: Mapping[str, CommunityTimeline],
        lexicon: CategoryLexicon | None = None,
    ):
        self.history = history
        self.lexicon = lexicon
        self.parents = ParentContext(timelines)
        self.names = [n for n, _ in feature_manifest(lexicon)]

    def __call__(self, w: EarlyWindow) -> FeatureVector:
        fv = FeatureVector(w.community, w.k)
        fv.update(volume_speed_features(w))
        fv.update(distribution_features(w))
        fv.update(user_composition_features(w, self.history))
        fv.update(linguistic_features(w, self.lexicon))
        fv.update(graph_features(build_reply_graph(w), w))
        fv.update(window_parent_features(w, self.history, self.parents))
        if list(fv.values) != self.names:
            raise AssertionError("feature order drifted from the manifest")
        return fv


def extract_features(
    w: EarlyWindow,
    history: UserHistoryIndex,
    timelines: Mapping[str, CommunityTimeline],
    lexicon: CategoryLexicon | None = None,
) -> FeatureVector:
    return FeatureExtractor(history, timelines, lexicon)(w)


__all__ = [
    "FAMILIES", "FeatureExtractor", "FeatureVector", "CategoryLexicon", "MANIFEST_VERSION", "RESERVED",
    "build_reply_graph", "cross_entropy", "distribution_features", "extract_features",
    "feature_manifest", "gini", "gini_pairwise", "graph_features", "linguistic_features",
    "manifest_document", "tokenize", "user_composition_features", "volume_speed_features",
]
