"""Command-line interface.

Subcommands: ``mine``, ``metrics``, ``features``, ``analyze``, ``zero-shot``,
``compare``, ``report``. Exit codes: 0 on success, 2 on partial failure (some
pairs skipped during a sweep), 1 on fatal error.
"""

from __future__ import annotations

import argparse
import sys

from . import pipeline
from .corpus import load_corpus, load_embeddings, load_language_table
from .mining import mine_backward, mine_direction, mine_intersection


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xlalign",
        description="Cross-lingual embedding alignment and isomorphism toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_mine = sub.add_parser("mine", help="margin-score bitext mining for one pair")
    p_mine.add_argument("--src", required=True, help="source embedding file")
    p_mine.add_argument("--tgt", required=True, help="target embedding file")
    p_mine.add_argument("--k", type=int, default=4, help="neighborhood size (default 4)")
    p_mine.add_argument(
        "--direction", choices=["forward", "backward", "intersection"], default="intersection"
    )
    p_mine.add_argument("--out", required=True, help="output TSV (row_a, row_b, margin)")

    p_metrics = sub.add_parser("metrics", help="all five metrics for one embedding pair")
    p_metrics.add_argument("--pair", nargs=2, required=True, metavar=("A", "B"))
    p_metrics.add_argument("--k", type=int, default=4)
    p_metrics.add_argument("--gh-max-points", type=int, default=500)
    p_metrics.add_argument("--out", required=True, help="output JSON")

    p_feat = sub.add_parser("features", help="13-feature vectors for every language pair")
    p_feat.add_argument("--languages", required=True, help="language metadata TSV")
    p_feat.add_argument("--corpus", help="corpus directory for both overlap features")
    p_feat.add_argument("--char-corpus", help="corpus directory for character overlap")
    p_feat.add_argument("--token-corpus", help="corpus directory for token overlap")
    p_feat.add_argument("--out", required=True, help="output CSV")

    p_analyze = sub.add_parser("analyze", help="statistical analysis of features vs metrics")
    p_analyze.add_argument("--features", required=True, help="features CSV")
    p_analyze.add_argument("--metrics", required=True, help="metrics CSV")
    p_analyze.add_argument(
        "--mode", required=True, choices=["corr", "search", "ablate", "anova", "ancova", "pca", "pcr"]
    )
    p_analyze.add_argument("--folds", type=int, default=10)
    p_analyze.add_argument("--seed", type=int, help="required for search/ablate/pcr")
    p_analyze.add_argument("--out", required=True, help="output JSON")

    p_zero = sub.add_parser("zero-shot", help="analyses over the zero-shot partitions")
    p_zero.add_argument("--metrics", required=True, help="metrics CSV")
    p_zero.add_argument("--languages", required=True, help="language metadata TSV")
    p_zero.add_argument("--features", help="features CSV (enables double-zero-shot correlations)")
    p_zero.add_argument("--out", required=True, help="output JSON")
    p_zero.add_argument("--plot-out", help="optional plot-data CSV of group means")

    p_cmp = sub.add_parser("compare", help="side-by-side comparison of two metric runs")
    p_cmp.add_argument("--a", required=True, help="baseline metrics CSV")
    p_cmp.add_argument("--b", required=True, help="variant metrics CSV")
    p_cmp.add_argument("--languages", help="language TSV for word-order grouping")
    p_cmp.add_argument("--out", required=True, help="output JSON")

    p_report = sub.add_parser("report", help="full end-to-end run from a config file")
    p_report.add_argument("--config", required=True, help="run config file")

    return parser


def _cmd_mine(args) -> int:
    src = load_embeddings(args.src)
    tgt = load_embeddings(args.tgt)
    miners = {
        "forward": mine_direction,
        "backward": mine_backward,
        "intersection": mine_intersection,
    }
    mined = miners[args.direction](src, tgt, args.k)
    lines = ["row_a\trow_b\tmargin"]
    for row_a, row_b, margin in mined.pairs:
        lines.append(f"{row_a}\t{row_b}\t{margin:.12g}")
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return 0


def _cmd_metrics(args) -> int:
    mat_a = load_embeddings(args.pair[0])
    mat_b = load_embeddings(args.pair[1])
    metrics = pipeline.compute_pair_metrics(
        mat_a, mat_b, k=args.k, gh_max_points=args.gh_max_points
    )
    pipeline.write_json(metrics.as_dict(), args.out)
    return 0


def _cmd_features(args) -> int:
    table = load_language_table(args.languages)
    char_texts = token_texts = None
    if args.corpus:
        shared = pipeline.corpus_texts(load_corpus(args.corpus))
        char_texts = token_texts = shared
    if args.char_corpus:
        char_texts = pipeline.corpus_texts(load_corpus(args.char_corpus))
    if args.token_corpus:
        token_texts = pipeline.corpus_texts(load_corpus(args.token_corpus))
    rows = pipeline.build_pair_feature_table(table, char_texts, token_texts)
    pipeline.write_features_csv(rows, args.out)
    return 0


def _cmd_analyze(args) -> int:
    if args.mode in pipeline.STOCHASTIC_MODES and args.seed is None:
        raise ValueError(f"--seed is required for mode {args.mode!r}")
    features_map = pipeline.read_features_csv(args.features)
    metrics_map = pipeline.read_metrics_csv(args.metrics)
    dataset = pipeline.make_analysis_dataset(features_map, metrics_map)
    if args.mode == "corr":
        report = pipeline.analyze_corr(dataset)
    elif args.mode == "search":
        report = pipeline.analyze_search(dataset, args.folds, args.seed)
    elif args.mode == "ablate":
        report = pipeline.analyze_ablate(dataset, args.folds, args.seed)
    elif args.mode == "anova":
        report = pipeline.analyze_anova(dataset)
    elif args.mode == "ancova":
        report = pipeline.analyze_ancova(dataset)
    elif args.mode == "pca":
        report = pipeline.analyze_pca(dataset)
    else:
        report = pipeline.analyze_pcr(dataset, args.folds, args.seed)
    pipeline.write_json(report, args.out)
    return 0


def _cmd_zero_shot(args) -> int:
    metrics_map = pipeline.read_metrics_csv(args.metrics)
    table = load_language_table(args.languages)
    features_map = pipeline.read_features_csv(args.features) if args.features else None
    report = pipeline.run_zero_shot_analysis(metrics_map, table, features_map)
    pipeline.write_json(report, args.out)
    if args.plot_out:
        pipeline.write_plot_csv(
            pipeline._zero_shot_plot_rows(report),
            ("factor", "level", "metric", "mean"),
            args.plot_out,
        )
    return 0


def _cmd_compare(args) -> int:
    metrics_a = pipeline.read_metrics_csv(args.a)
    metrics_b = pipeline.read_metrics_csv(args.b)
    table = load_language_table(args.languages) if args.languages else None
    report = pipeline.run_case_study_compare(metrics_a, metrics_b, table)
    pipeline.write_json(report, args.out)
    return 0


def _cmd_report(args) -> int:
    config = pipeline.load_config(args.config)
    return pipeline.run_report(config)


_COMMANDS = {
    "mine": _cmd_mine,
    "metrics": _cmd_metrics,
    "features": _cmd_features,
    "analyze": _cmd_analyze,
    "zero-shot": _cmd_zero_shot,
    "compare": _cmd_compare,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"xlalign: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
