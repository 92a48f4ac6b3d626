"""Batch command line: synth, ingest, features, labels, correlate, experiments, report, run.

Every stage reads the files of the stage before it from ``--out-dir`` and
writes its own files there. Exit codes: 0 success, 2 configuration error,
3 data error, 4 degenerate statistics.
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections import Counter
from pathlib import Path
from typing import Sequence

import numpy as np

from commsuccess import pipeline as pl
from commsuccess.config import Config, load_config
from commsuccess.errors import CommSuccessError, ConfigurationError, DataError
from commsuccess.features import feature_manifest
from commsuccess.features.text import CategoryLexicon
from commsuccess.model import FeatureTable
from commsuccess.stats import CorrelationMatrix, correlation_matrix
from commsuccess.success import MEASURES

log = logging.getLogger("commsuccess")


def _config(args) -> Config:
    return load_config(
        args.config,
        k_min=getattr(args, "k_min", None),
        k_max=getattr(args, "k_max", None),
        k_step=getattr(args, "k_step", None),
        seed=getattr(args, "seed", None),
        year=getattr(args, "year", None),
    )


def _lexicon(args) -> CategoryLexicon | None:
    if args.no_lexicon:
        return None
    if args.lexicon is None:
        return CategoryLexicon.default()
    try:
        return CategoryLexicon.load(args.lexicon)
    except OSError:
        log.warning("lexicon %s not readable; category features are skipped", args.lexicon)
        return None


def _ks(out: Path, config: Config, stage: str) -> list[int]:
    have = set(pl.available_ks(out, stage))
    ks = [k for k in config.ks if k in have]
    if not ks:
        raise DataError(f"no {stage} files for k in {config.ks} under {out}; run the '{stage}' stage first")
    return ks


def cmd_synth(args) -> int:
    from commsuccess.synth import generate_corpus

    corpus = generate_corpus(args.n_communities, seed=args.seed if args.seed is not None else 0)
    posts, comments = corpus.write(args.out_dir, compress=args.compress)
    pl.write_json(Path(args.out_dir) / "planted.json", corpus.planted())
    print(f"wrote {len(corpus.events)} events to {posts} and {comments}")
    return 0


def cmd_ingest(args) -> int:
    config = _config(args)
    if not args.posts or not args.comments:
        raise ConfigurationError("ingest needs --posts and --comments")
    diag: Counter = Counter()
    corpus = pl.load_corpus(args.posts, args.comments, diag)
    if not corpus.timelines:
        log.warning("no events read; writing an empty checkpoint")
    focal = pl.focal_communities(corpus, config.year)
    out = Path(args.out_dir)
    summary = {
        "year": config.year,
        "n_communities": len(corpus.timelines),
        "n_focal": len(focal),
        "n_users": len(corpus.history),
        "diagnostics": dict(sorted(corpus.diagnostics.items())),
    }
    pl.save_checkpoint(corpus, out / "checkpoint", focal, summary)
    print(f"{len(corpus.timelines)} timelines, {len(focal)} created in {config.year}")
    return 0


def cmd_features(args) -> int:
    config = _config(args)
    out = Path(args.out_dir)
    corpus, focal, _ = pl.load_checkpoint(out / "checkpoint")
    lexicon = _lexicon(args)
    names = [n for n, _ in feature_manifest(lexicon)]
    pl.write_feature_manifest(out, lexicon)
    feats = pl.compute_features(corpus, focal, config.ks, lexicon, config, args.jobs)
    for k, vecs in feats.items():
        pl.write_features(out, k, vecs, names)
        print(f"k={k}: {len(vecs)} communities")
    return 0


def cmd_labels(args) -> int:
    config = _config(args)
    out = Path(args.out_dir)
    corpus, focal, _ = pl.load_checkpoint(out / "checkpoint")
    success = pl.compute_success(corpus, focal, config.ks, config)
    for k, s in success.items():
        if len(s) < 2:
            log.warning("k=%d: %d qualifying communities, no labels written", k, len(s))
            continue
        pl.write_labels(out, k, s, pl.label_sets(s, k))
    return 0


def cmd_correlate(args) -> int:
    config = _config(args)
    out = Path(args.out_dir)
    mats = {}
    for k in _ks(out, config, "labels"):
        values, _ = pl.read_labels(out, k)
        ids = sorted(values[MEASURES[0]])
        columns = {m: [values[m][c] for c in ids] for m in MEASURES}
        for method in config.correlation_methods:
            mat = correlation_matrix(columns, method, k)
            mats[(k, method)] = mat
            pl.write_matrix(out / "correlations" / f"{method}_k{k:03d}.csv", mat)
    for method in config.correlation_methods:
        group = [m for (_, meth), m in sorted(mats.items()) if meth == method]
        pl.write_matrix(out / "correlations" / f"{method}_mean.csv", pl.average_matrices(group))
    pl.write_csv(out / "correlations" / "correlations_long.csv",
                 ["k", "measure_a", "measure_b", "method", "coefficient"], pl.correlation_long_rows(mats))
    return 0


def cmd_experiments(args) -> int:
    config = _config(args)
    out = Path(args.out_dir)
    labelled = set(_ks(out, config, "labels"))
    tables: dict[int, FeatureTable] = {}
    labels = {}
    for k in _ks(out, config, "features"):
        if k not in labelled:
            continue
        tables[k] = pl.read_feature_table(out, k)
        labels[k] = pl.read_labels(out, k)[1]
    if not tables:
        raise DataError("no k has both features and labels; run 'features' and 'labels' with the same k range")
    results = pl.run_experiments(tables, labels, config, jobs=args.jobs)
    path = pl.write_results(out, results)
    print(f"{len(results)} experiments -> {path}")
    return 0


def _read_correlations(out: Path, config: Config):
    mats = {}
    for method in config.correlation_methods:
        for p in sorted((out / "correlations").glob(f"{method}_k*.csv")):
            k = int(p.stem.split("_k")[-1])
            rows = pl.read_csv(p)
            names = [r["measure"] for r in rows]
            M = np.array([[float(r[b]) if r[b] else np.nan for b in names] for r in rows])
            mats[(k, method)] = CorrelationMatrix(tuple(names), M, method, k)
    if not mats:
        raise DataError(f"no correlation files under {out / 'correlations'}; run the 'correlate' stage first")
    return mats


def cmd_report(args) -> int:
    config = _config(args)
    out = Path(args.out_dir)
    report = pl.build_report(pl.read_results(out), _read_correlations(out, config))
    for p in pl.write_report(out, report):
        print(p)
    return 0


def cmd_run(args) -> int:
    for fn in (cmd_ingest, cmd_features, cmd_labels, cmd_correlate, cmd_experiments, cmd_report):
        fn(args)
    return 0


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML file of study settings")
    common.add_argument("--out-dir", type=Path, default=Path("out"))
    common.add_argument("--seed", type=int)
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--year", type=int)
    common.add_argument("--k-min", type=int)
    common.add_argument("--k-max", type=int)
    common.add_argument("--k-step", type=int)
    common.add_argument("--lexicon", type=Path, help="category word list (default: bundled)")
    common.add_argument("--no-lexicon", action="store_true", help="skip category features")
    common.add_argument("--posts", type=Path)
    common.add_argument("--comments", type=Path)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="commsuccess", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn, help_ in [
        ("ingest", cmd_ingest, "read dumps, write timelines and user-history checkpoint"),
        ("features", cmd_features, "early-window features per k"),
        ("labels", cmd_labels, "success measures and median labels per k"),
        ("correlate", cmd_correlate, "pairwise rank correlations of success measures"),
        ("experiments", cmd_experiments, "logistic-regression experiments"),
        ("report", cmd_report, "AUC summary, correlation table, top features"),
        ("run", cmd_run, "all stages from ingest to report"),
    ]:
        sub.add_parser(name, parents=[common], help=help_).set_defaults(func=fn)
    sp = sub.add_parser("synth", parents=[common], help="write a synthetic dump")
    sp.add_argument("--n-communities", type=int, default=400)
    sp.add_argument("--compress", action="store_true")
    sp.set_defaults(func=cmd_synth)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return ConfigurationError.exit_code
    try:
        return args.func(args)
    except CommSuccessError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())
