import math
from collections import Counter

import numpy as np
import pytest
from conftest import comment, post, timeline
from hypothesis import given, settings
from hypothesis import strategies as st

from commsuccess.features import FeatureExtractor, cross_entropy, feature_manifest, manifest_document
from commsuccess.features.parents import (
    ParentContext,
    build_genealogy,
    find_parents,
    parent_features,
    window_parent_features,
)
from commsuccess.features.text import CategoryLexicon
from commsuccess.ingest import Corpus, build_user_history, extract_early_window


def _focal(members="ab", start=100):
    evs = [post(f"f{i}", m, start + i, community="f", body="hello there") for i, m in enumerate(members)]
    return extract_early_window(timeline(evs, "f"), len(members)), evs


class TestFindParents:
    def test_shared_parent(self):
        w, focal = _focal()
        h = build_user_history(focal + [post("x1", "a", 80, community="X"), post("x2", "b", 90, community="X")])
        assert find_parents(w, h) == {"X": {"a", "b"}}

    def test_brand_new(self):
        w, focal = _focal()
        assert find_parents(w, build_user_history(focal)) == {}

    def test_outside_prior_month(self):
        w, focal = _focal()
        h = build_user_history(focal + [post("x1", "a", 60, community="X")])
        assert find_parents(w, h) == {}

    def test_focal_ignored(self):
        w, focal = _focal()
        h = build_user_history(focal + [post("f0", "a", 80, community="f")])
        assert find_parents(w, h) == {}


class TestGenealogy:
    def test_edges(self):
        assert build_genealogy({"X": {"a", "b"}, "Y": {"a", "b"}}).number_of_edges() == 1
        assert build_genealogy({"X": {"a", "b"}, "Y": {"a", "c"}}).number_of_edges() == 0
        g = build_genealogy({"X": {"a"}})
        assert (g.number_of_nodes(), g.number_of_edges()) == (1, 0)

    def test_features_complete(self):
        g = build_genealogy({p: {"a", "b"} for p in "XYZ"})
        fv = parent_features(g, ["a"], {p: ["a"] for p in "XYZ"}, {p: 5 for p in "XYZ"})
        assert fv["genealogy_density"] == 1 and fv["genealogy_transitivity"] == 1
        assert fv["gini_parent_member_counts"] == 0 and fv["n_parents"] == 3

    def test_log_sizes(self):
        g = build_genealogy({"X": {"a"}, "Y": {"b"}})
        fv = parent_features(g, ["t"], {}, {"X": 10, "Y": 1000})
        assert fv["max_log_parent_size"] == pytest.approx(math.log(1001))
        assert fv["min_log_parent_size"] == pytest.approx(math.log(11))

    def test_no_parents(self):
        fv = parent_features(build_genealogy({}), ["a"], {}, {})
        assert fv["has_parents"] == 0 and all(v == 0 for v in fv.values.values())
        assert not fv.flagged

    def test_window_features_with_context(self):
        w, focal = _focal()
        others = [post("x1", "a", 80, community="X", body="hello world"), post("x2", "b", 90, community="X"),
                  post("y1", "a", 85, community="Y", body="zzz")]
        corpus = Corpus.from_events(focal + others)
        fv = window_parent_features(w, corpus.history, ParentContext(corpus.timelines))
        assert fv["n_parents"] == 2 and fv["has_parents"] == 1
        assert fv["max_log_parent_size"] == pytest.approx(math.log(3))
        assert fv["max_lang_distance"] >= fv["median_lang_distance"] > 0


class TestCrossEntropy:
    def test_large_counts_ln2(self):
        p = ["a", "b"] * 1000
        assert abs(cross_entropy(p, p) - math.log(2)) <= 1e-3

    def test_absent_token_finite(self):
        h = cross_entropy(["z"] * 10, ["a"] * 100)
        assert math.isfinite(h) and h > math.log(100)

    def test_counts_equal_sequences(self):
        assert cross_entropy(Counter("aab"), Counter("abc")) == cross_entropy(list("aab"), list("abc"))

    def test_empty_reference(self):
        with pytest.raises(ValueError):
            cross_entropy([], ["a"])

    @given(st.lists(st.integers(1, 50), min_size=2, max_size=6), st.lists(st.integers(1, 50), min_size=2, max_size=6))
    @settings(max_examples=200, deadline=None)
    def test_gibbs(self, pc, qc):
        n = min(len(pc), len(qc))
        scale = 10_000
        p = {f"w{i}": c * scale for i, c in enumerate(pc[:n])}
        q = {f"w{i}": c * scale for i, c in enumerate(qc[:n])}
        total = sum(p.values())
        entropy = -sum(c / total * math.log(c / total) for c in p.values())
        assert cross_entropy(p, q) >= entropy - 1e-4
        # smoothing distortion on P against itself is tiny at large counts
        assert cross_entropy(p, p) == pytest.approx(entropy, abs=1e-3)


class TestManifest:
    def test_names_and_families(self):
        lex = CategoryLexicon.default()
        names = [n for n, _ in feature_manifest(lex)]
        assert len(names) == len(set(names))
        assert "post_we" in names and "comment_negemo" in names
        doc = manifest_document(lex)
        assert doc["reserved"] and not set(doc["reserved"]) & set(names)

    def test_extractor_matches_manifest(self):
        from commsuccess.synth import generate_corpus

        sc = generate_corpus(12, seed=3)
        corpus = Corpus.from_events(sc.events)
        lex = CategoryLexicon.default()
        fx = FeatureExtractor(corpus.history, corpus.timelines, lex)
        expected = [n for n, _ in feature_manifest(lex)]
        n_windows = 0
        for tl in corpus.timelines.values():
            w = extract_early_window(tl, 10)
            if w is None:
                continue
            fv = fx(w)
            n_windows += 1
            assert list(fv.values) == expected
            assert np.all(np.isfinite(list(fv.values.values())))
        assert n_windows > 3
