"""Study stages: windows, features, labels, correlations, experiments, report.

Each stage has an in-memory function and a file form. Files are CSV with
JSON sidecars; rows are always sorted (community id, or experiment key) so
that identical inputs give byte-identical outputs.
"""

from __future__ import annotations

import csv
import gzip
import json
import logging
import math
import multiprocessing
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from commsuccess.config import Config
from commsuccess.errors import DataError, DegenerateStatisticsError
from commsuccess.features import FAMILIES, FeatureExtractor, FeatureVector, manifest_document
from commsuccess.features.text import CategoryLexicon
from commsuccess.ingest import (
    Activity,
    CommunityTimeline,
    Corpus,
    EarlyWindow,
    UserHistoryIndex,
    event_from_dict,
    event_to_dict,
    extract_early_window,
    monthly_partition,
    read_dump,
)
from commsuccess.model import ExperimentResult, FeatureTable, run_experiment
from commsuccess.stats import CorrelationMatrix, average_matrices, correlation_matrix, mrr_ranking
from commsuccess.success import MEASURES, LabelSet, SuccessMeasures, binarize, success_measures

log = logging.getLogger(__name__)

MODEL_FAMILIES = FAMILIES + ("all",)
TOP_FEATURES = 10

# ---------------------------------------------------------------------------
# worker pool


_WORKER_STATE: dict = {}


def _pool_map(fn: Callable, items: Sequence, jobs: int, state: dict) -> list:
    """Order-preserving map; ``state`` is visible to workers via fork inheritance."""
    _WORKER_STATE.clear()
    _WORKER_STATE.update(state)
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    ctx = multiprocessing.get_context("fork")
    with ProcessPoolExecutor(max_workers=jobs, mp_context=ctx) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))


# ---------------------------------------------------------------------------
# corpus and windows


def load_corpus(posts: str | Path, comments: str | Path, diagnostics: Counter | None = None) -> Corpus:
    diag = diagnostics if diagnostics is not None else Counter()
    events = read_dump(posts, "posts", diag) + read_dump(comments, "comments", diag)
    corpus = Corpus.from_events(events)
    corpus.diagnostics.update(diag)
    return corpus


def creation_year(tl: CommunityTimeline) -> int:
    return datetime.fromtimestamp(tl.created_at, tz=timezone.utc).year


def focal_communities(corpus: Corpus, year: int | None) -> list[str]:
    """Communities whose first event falls in ``year`` (all of them when ``year`` is None)."""
    return sorted(c for c, tl in corpus.timelines.items() if year is None or creation_year(tl) == year)


def windows_at(
    corpus: Corpus, communities: Iterable[str], k: int, config: Config | None = None
) -> dict[str, EarlyWindow]:
    config = config or Config()
    out = {}
    for c in sorted(communities):
        w = extract_early_window(corpus.timelines[c], k, config.qualification_days)
        if w is not None:
            out[c] = w
    return out


def qualifying_counts(corpus: Corpus, communities: Iterable[str], ks: Sequence[int], config: Config | None = None) -> dict[int, int]:
    communities = list(communities)
    return {k: len(windows_at(corpus, communities, k, config)) for k in ks}


def window_success(timeline: CommunityTimeline, w: EarlyWindow, config: Config) -> SuccessMeasures:
    monthly = monthly_partition(timeline, w.t_k, config.months_needed)
    return success_measures(
        monthly, config.activity_months, config.survival_months, config.survival_tail_months
    )


# ---------------------------------------------------------------------------
# in-memory stages


def _features_task(item):
    c, k = item
    st = _WORKER_STATE
    w = extract_early_window(st["corpus"].timelines[c], k, st["config"].qualification_days)
    return st["extractor"](w) if w is not None else None


def compute_features(
    corpus: Corpus,
    communities: Iterable[str],
    ks: Sequence[int],
    lexicon: CategoryLexicon | None = None,
    config: Config | None = None,
    jobs: int = 1,
) -> dict[int, list[FeatureVector]]:
    """Feature vectors of every community qualifying at each k, sorted by community."""
    config = config or Config()
    communities = sorted(communities)
    items = [(c, k) for k in ks for c in communities]
    state = {
        "corpus": corpus,
        "config": config,
        "extractor": FeatureExtractor(corpus.history, corpus.timelines, lexicon),
    }
    vecs = _pool_map(_features_task, items, jobs, state)
    out: dict[int, list[FeatureVector]] = {k: [] for k in ks}
    for (c, k), fv in zip(items, vecs):
        if fv is not None:
            out[k].append(fv)
    return out


def compute_success(
    corpus: Corpus, communities: Iterable[str], ks: Sequence[int], config: Config | None = None
) -> dict[int, dict[str, SuccessMeasures]]:
    config = config or Config()
    communities = sorted(communities)
    return {
        k: {c: window_success(corpus.timelines[c], w, config) for c, w in windows_at(corpus, communities, k, config).items()}
        for k in ks
    }


def label_sets(success: Mapping[str, SuccessMeasures], k: int) -> dict[str, LabelSet]:
    return {m: binarize({c: getattr(s, m) for c, s in success.items()}, k, m) for m in MEASURES}


def correlations(
    success_by_k: Mapping[int, Mapping[str, SuccessMeasures]], methods: Sequence[str] = ("spearman",)
) -> dict[tuple[int, str], CorrelationMatrix]:
    out = {}
    for k, success in sorted(success_by_k.items()):
        if len(success) < 2:
            log.warning("k=%d: fewer than two communities, no correlations", k)
            continue
        ids = sorted(success)
        cols = {m: [getattr(success[c], m) for c in ids] for m in MEASURES}
        for method in methods:
            out[(k, method)] = correlation_matrix(cols, method, k)
    return out


def _experiment_task(item):
    measure, k, family = item
    st = _WORKER_STATE
    try:
        return run_experiment(st["tables"][k], st["labels"][k][measure], measure, k, family, st["config"])
    except DegenerateStatisticsError as exc:
        log.warning("skipping %s k=%d %s: %s", measure, k, family, exc)
        return None


def run_experiments(
    tables: Mapping[int, FeatureTable],
    labels: Mapping[int, Mapping[str, Mapping[str, int]]],
    config: Config | None = None,
    measures: Sequence[str] = MEASURES,
    families: Sequence[str] = MODEL_FAMILIES,
    jobs: int = 1,
) -> list[ExperimentResult]:
    """One experiment per (measure, k, family). Degenerate tasks are skipped with a warning.

    Args:
        tables: feature table per k.
        labels: ``labels[k][measure][community]`` in {0, 1}.
    """
    config = config or Config()
    items = [(m, k, f) for m in measures for k in sorted(tables) for f in families]
    state = {"tables": tables, "labels": labels, "config": config}
    results = _pool_map(_experiment_task, items, jobs, state)
    return [r for r in results if r is not None]


@dataclass
class Report:
    auc_summary: list[dict]
    correlation_rows: list[dict]
    top_features: list[dict]


def summarize_auc(results: Sequence[ExperimentResult]) -> list[dict]:
    groups: dict[tuple[str, str], list[float]] = {}
    for r in results:
        groups.setdefault((r.measure, r.family), []).append(r.auc)
    rows = []
    for m in MEASURES:
        for f in MODEL_FAMILIES:
            aucs = groups.get((m, f))
            if not aucs:
                continue
            arr = np.array(aucs)
            rows.append({
                "measure": m, "family": f, "n_k": arr.size,
                "median_auc": float(np.median(arr)), "mean_auc": float(arr.mean()),
                "std_auc": float(arr.std(ddof=1)) if arr.size > 1 else 0.0,
                "min_auc": float(arr.min()), "max_auc": float(arr.max()),
            })
    return rows


def correlation_long_rows(mats: Mapping[tuple[int, str], CorrelationMatrix]) -> list[dict]:
    rows = []
    by_method: dict[str, list[CorrelationMatrix]] = {}
    for (k, method), mat in sorted(mats.items()):
        by_method.setdefault(method, []).append(mat)
        for a, b, v in mat.pairs():
            rows.append({"k": k, "measure_a": a, "measure_b": b, "method": method, "coefficient": v})
    for method, group in sorted(by_method.items()):
        for a, b, v in average_matrices(group).pairs():
            rows.append({"k": "mean", "measure_a": a, "measure_b": b, "method": method, "coefficient": v})
    return rows


def top_features(results: Sequence[ExperimentResult], top: int = TOP_FEATURES, family: str = "all") -> list[dict]:
    rows = []
    for m in MEASURES:
        per_k = [r for r in sorted(results, key=lambda r: r.k) if r.measure == m and r.family == family]
        if not per_k:
            continue
        for rank, rf in enumerate(mrr_ranking([r.weights for r in per_k])[:top], start=1):
            rows.append({
                "measure": m, "rank": rank, "feature": rf.name,
                "mrr": rf.mrr, "mean_coefficient": rf.mean_coefficient,
            })
    return rows


def build_report(results: Sequence[ExperimentResult], mats: Mapping[tuple[int, str], CorrelationMatrix]) -> Report:
    return Report(summarize_auc(results), correlation_long_rows(mats), top_features(results))


@dataclass
class Study:
    """Everything one run of the study produces, kept in memory."""

    config: Config
    counts: dict[int, int]
    features: dict[int, list[FeatureVector]]
    success: dict[int, dict[str, SuccessMeasures]]
    labels: dict[int, dict[str, LabelSet]]
    correlations: dict[tuple[int, str], CorrelationMatrix]
    results: list[ExperimentResult] = field(default_factory=list)
    report: Report | None = None


def run_study(
    corpus: Corpus,
    config: Config | None = None,
    lexicon: CategoryLexicon | None = None,
    measures: Sequence[str] = MEASURES,
    families: Sequence[str] = MODEL_FAMILIES,
    jobs: int = 1,
) -> Study:
    """Corpus -> features, labels, correlations, experiments, report, all in memory.

    ``lexicon`` defaults to the bundled one; pass an empty
    :class:`CategoryLexicon` to skip category features.
    """
    config = config or Config()
    lexicon = CategoryLexicon.default() if lexicon is None else lexicon
    focal = focal_communities(corpus, config.year)
    ks = config.ks
    feats = compute_features(corpus, focal, ks, lexicon, config, jobs)
    success = compute_success(corpus, focal, ks, config)
    usable = [k for k in ks if len(success[k]) >= 2]
    labels = {k: label_sets(success[k], k) for k in usable}
    mats = correlations(success, config.correlation_methods)
    tables = {k: FeatureTable.from_vectors(feats[k]) for k in usable if feats[k]}
    label_maps = {k: {m: ls.labels for m, ls in labels[k].items()} for k in tables}
    results = run_experiments(tables, label_maps, config, measures, families, jobs)
    study = Study(config, {k: len(success[k]) for k in ks}, feats, success, labels, mats, results)
    study.report = build_report(results, mats)
    return study


# ---------------------------------------------------------------------------
# file I/O


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ""
    return str(v)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Mapping]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(row[h]) for h in header])


def read_csv(path: Path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _require(path: Path, stage: str) -> Path:
    if not path.exists():
        raise DataError(f"{path} not found; run the '{stage}' stage first")
    return path


def save_checkpoint(corpus: Corpus, out_dir: Path, focal: Sequence[str], summary: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    with gzip.open(out_dir / "timelines.jsonl.gz", "wt", encoding="utf-8", compresslevel=6) as fh:
        for c, tl in sorted(corpus.timelines.items()):
            fh.write(json.dumps({"community": c, "events": [event_to_dict(e) for e in tl.events]}, sort_keys=True))
            fh.write("\n")
    with gzip.open(out_dir / "user_history.jsonl.gz", "wt", encoding="utf-8", compresslevel=6) as fh:
        for u in corpus.history.users():
            log_ = [list(a) for a in corpus.history.log(u)]
            fh.write(json.dumps({"user": u, "first_seen": corpus.history.first_seen(u), "log": log_}, sort_keys=True))
            fh.write("\n")
    write_json(out_dir / "checkpoint.json", {**summary, "focal_communities": list(focal)})


def load_checkpoint(ckpt_dir: Path) -> tuple[Corpus, list[str], dict]:
    meta_path = _require(ckpt_dir / "checkpoint.json", "ingest")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    timelines = {}
    with gzip.open(_require(ckpt_dir / "timelines.jsonl.gz", "ingest"), "rt", encoding="utf-8") as fh:
        for line in fh:
            d = json.loads(line)
            timelines[d["community"]] = CommunityTimeline.from_events(
                d["community"], (event_from_dict(e) for e in d["events"])
            )
    logs = {}
    with gzip.open(_require(ckpt_dir / "user_history.jsonl.gz", "ingest"), "rt", encoding="utf-8") as fh:
        for line in fh:
            d = json.loads(line)
            logs[d["user"]] = [Activity(*a) for a in d["log"]]
    corpus = Corpus(timelines, UserHistoryIndex(logs))
    return corpus, list(meta["focal_communities"]), meta


def features_path(out_dir: Path, k: int) -> Path:
    return out_dir / "features" / f"features_k{k:03d}.csv"


def write_features(out_dir: Path, k: int, vectors: Sequence[FeatureVector], names: Sequence[str]) -> Path:
    path = features_path(out_dir, k)
    header = ["community", "k", *names, "flagged"]
    rows = []
    for v in sorted(vectors, key=lambda v: v.community):
        row = {"community": v.community, "k": k, **v.values}
        row["flagged"] = ";".join(n for n in names if n in v.flagged)
        rows.append(row)
    write_csv(path, header, rows)
    return path


def read_feature_table(out_dir: Path, k: int) -> FeatureTable:
    path = _require(features_path(out_dir, k), "features")
    manifest = json.loads(_require(out_dir / "features" / "feature_manifest.json", "features").read_text("utf-8"))
    fams = {f["name"]: f["family"] for f in manifest["features"]}
    rows = read_csv(path)
    vectors = []
    for row in rows:
        fv = FeatureVector(row["community"], k)
        flagged = set(filter(None, row["flagged"].split(";")))
        for name in fams:
            fv.add(name, float(row[name]), fams[name], name in flagged)
        vectors.append(fv)
    if not vectors:
        raise DataError(f"{path} has no rows")
    return FeatureTable.from_vectors(vectors)


def labels_path(out_dir: Path, k: int) -> Path:
    return out_dir / "labels" / f"success_k{k:03d}.csv"


def write_labels(out_dir: Path, k: int, success: Mapping[str, SuccessMeasures], labels: Mapping[str, LabelSet]) -> Path:
    path = labels_path(out_dir, k)
    header = ["community_id", *MEASURES, *(f"label_{m}" for m in MEASURES), "survival_flagged"]
    rows = []
    for c in sorted(success):
        row = {"community_id": c, **success[c].as_dict(), "survival_flagged": int(success[c].survival_flagged)}
        for m in MEASURES:
            row[f"label_{m}"] = labels[m].labels[c]
        rows.append(row)
    write_csv(path, header, rows)
    write_json(path.with_name(f"medians_k{k:03d}.json"), {
        "k": k,
        "medians": {m: labels[m].threshold for m in MEASURES},
        "n_communities": len(success),
        "diagnostics": [d for m in MEASURES for d in labels[m].diagnostics],
    })
    return path


def read_labels(out_dir: Path, k: int) -> tuple[dict[str, dict[str, float]], dict[str, dict[str, int]]]:
    """Return (measures[measure][community], labels[measure][community])."""
    rows = read_csv(_require(labels_path(out_dir, k), "labels"))
    values = {m: {r["community_id"]: float(r[m]) for r in rows} for m in MEASURES}
    labels = {m: {r["community_id"]: int(r[f"label_{m}"]) for r in rows} for m in MEASURES}
    return values, labels


def available_ks(out_dir: Path, stage: str) -> list[int]:
    sub = {"features": ("features", "features_k"), "labels": ("labels", "success_k")}[stage]
    files = sorted((out_dir / sub[0]).glob(f"{sub[1]}*.csv"))
    if not files:
        raise DataError(f"no {stage} files under {out_dir / sub[0]}; run the '{stage}' stage first")
    return [int(p.stem.split("_k")[-1]) for p in files]


def write_matrix(path: Path, mat: CorrelationMatrix) -> None:
    rows = []
    for i, a in enumerate(mat.measures):
        rows.append({"measure": a, **{b: float(mat.matrix[i, j]) for j, b in enumerate(mat.measures)}})
    write_csv(path, ["measure", *mat.measures], rows)


RESULT_HEADER = ["measure", "k", "family", "auc", "lambda", "cv_auc", "seed", "n_train", "n_test", "converged"]


def write_results(out_dir: Path, results: Sequence[ExperimentResult]) -> Path:
    order = {m: i for i, m in enumerate(MEASURES)}
    fam_order = {f: i for i, f in enumerate(MODEL_FAMILIES)}
    results = sorted(results, key=lambda r: (order[r.measure], r.k, fam_order[r.family]))
    path = out_dir / "experiments" / "results.csv"
    write_csv(path, RESULT_HEADER, (r.row() for r in results))
    write_json(out_dir / "experiments" / "weights.json", [
        {"measure": r.measure, "k": r.k, "family": r.family, "bias": r.bias, "weights": r.weights}
        for r in results
    ])
    return path


def read_results(out_dir: Path) -> list[ExperimentResult]:
    rows = read_csv(_require(out_dir / "experiments" / "results.csv", "experiments"))
    weights = json.loads(_require(out_dir / "experiments" / "weights.json", "experiments").read_text("utf-8"))
    wmap = {(w["measure"], w["k"], w["family"]): w for w in weights}
    out = []
    for r in rows:
        key = (r["measure"], int(r["k"]), r["family"])
        w = wmap[key]
        out.append(ExperimentResult(
            measure=key[0], k=key[1], family=key[2], auc=float(r["auc"]), lam=float(r["lambda"]),
            seed=int(r["seed"]), n_train=int(r["n_train"]), n_test=int(r["n_test"]),
            weights=w["weights"], bias=w["bias"], converged=bool(int(r["converged"])),
            cv_auc=float(r["cv_auc"]) if r["cv_auc"] else math.nan,
        ))
    return out


def write_report(out_dir: Path, report: Report) -> list[Path]:
    rep = out_dir / "report"
    paths = [rep / "auc_summary.csv", rep / "correlations_long.csv", rep / "top_features.csv"]
    write_csv(paths[0], ["measure", "family", "n_k", "median_auc", "mean_auc", "std_auc", "min_auc", "max_auc"],
              report.auc_summary)
    write_csv(paths[1], ["k", "measure_a", "measure_b", "method", "coefficient"], report.correlation_rows)
    write_csv(paths[2], ["measure", "rank", "feature", "mrr", "mean_coefficient"], report.top_features)
    return paths


def write_feature_manifest(out_dir: Path, lexicon: CategoryLexicon | None) -> None:
    write_json(out_dir / "features" / "feature_manifest.json", manifest_document(lexicon))
