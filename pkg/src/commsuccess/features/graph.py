"""Early-member reply graph and its structural features."""

from __future__ import annotations

import csv
from collections import Counter
from pathlib import Path

import networkx as nx

from commsuccess.features.vector import FeatureVector
from commsuccess.ingest import COMMENT, POST, EarlyWindow


def build_reply_graph(w: EarlyWindow, diagnostics: Counter | None = None) -> nx.Graph:
    """Undirected simple graph over the k members; edge when one replied to the other.

    Replies to sentinel authors, self-replies and replies whose parent lies
    outside the window add no edge. Unresolvable parents are counted under
    ``diagnostics["dangling_parent"]``.
    """
    g = nx.Graph()
    g.add_nodes_from(w.members)
    by_id = {ev.event_id: ev for ev in w.events}
    for ev in w.events:
        if ev.kind != COMMENT:
            continue
        parent = by_id.get(ev.parent)
        if parent is None:
            if diagnostics is not None:
                diagnostics["dangling_parent"] += 1
            continue
        a, b = ev.author, parent.author
        if a != b and a in g and b in g:
            g.add_edge(a, b)
    return g


def triangles_and_triples(g: nx.Graph) -> tuple[int, int]:
    """(number of triangles, number of connected triples centred on a node)."""
    tri = sum(nx.triangles(g).values()) // 3
    triples = sum(d * (d - 1) // 2 for _, d in g.degree())
    return tri, triples


def _replied_fraction(w: EarlyWindow, kind: str) -> tuple[float, bool]:
    targets = [ev.event_id for ev in w.events if ev.kind == kind]
    if not targets:
        return 0.0, True
    replied = {ev.parent for ev in w.events if ev.kind == COMMENT}
    return sum(1 for t in targets if t in replied) / len(targets), False


def graph_features(g: nx.Graph, w: EarlyWindow) -> FeatureVector:
    fv = FeatureVector(w.community, w.k)
    fam = "social"
    n = g.number_of_nodes()

    tri, triples = triangles_and_triples(g)
    fv.add("transitivity", 3 * tri / triples if triples else 0.0, fam, flagged=triples == 0)
    fv.add("avg_clustering", nx.average_clustering(g) if n else 0.0, fam)
    if n < 2:
        fv.add("density", 0.0, fam, flagged=True)
    else:
        fv.add("density", 2 * g.number_of_edges() / (n * (n - 1)), fam)

    if n:
        largest = max(len(c) for c in nx.connected_components(g))
        singletons = sum(1 for _, d in g.degree() if d == 0)
        fv.add("largest_component_fraction", largest / n, fam)
        fv.add("singleton_fraction", singletons / n, fam)
    else:
        fv.add("largest_component_fraction", 0.0, fam, flagged=True)
        fv.add("singleton_fraction", 0.0, fam, flagged=True)

    for name, kind in (("frac_posts_replied", POST), ("frac_comments_replied", COMMENT)):
        value, missing = _replied_fraction(w, kind)
        fv.add(name, value, fam, flagged=missing)
    return fv


def write_edge_list(g: nx.Graph, path: str | Path) -> None:
    rows = sorted(tuple(sorted(e)) for e in g.edges())
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["member_a", "member_b"])
        writer.writerows(rows)
