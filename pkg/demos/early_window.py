"""Look at one community through the eyes of the feature extractors.

Generates a single concentrated community (one member does most of the
talking) and a spread-out one, then prints their early-window features side
by side at k=10.

    python demos/early_window.py
"""

from dataclasses import replace

from commsuccess.features import extract_features
from commsuccess.ingest import Corpus, extract_early_window
from commsuccess.synth import SynthParams, generate

K = 10

base = SynthParams(arrival_rate=0.3, activity_rate=8.0, reply_prob=0.5, seed=7)
events = generate(replace(base, community="loud", concentration=0.05))
events += generate(replace(base, community="even", concentration=50.0))
corpus = Corpus.from_events(events)

vectors = {}
for name in ("loud", "even"):
    w = extract_early_window(corpus.timelines[name], K)
    print(f"{name}: {len(w.events)} events, k-th member after {w.days_to_k:.1f} days")
    vectors[name] = extract_features(w, corpus.history, corpus.timelines)

print(f"\n{'feature':<34}{'loud':>10}{'even':>10}")
for n in vectors["loud"].values:
    a, b = vectors["loud"].values[n], vectors["even"].values[n]
    print(f"{n:<34}{a:>10.3f}{b:>10.3f}")
