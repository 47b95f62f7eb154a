"""Command-line front end: fetch, similarity, select, regress, report, run, serve."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from crossmap import __version__
from crossmap.corpus import CCSS_PREFIX_DOMAINS, Side, load_corpus, scheme_from_id_prefixes
from crossmap.embeddings import EmbeddingConfig, fetch_embeddings, load_matrix, save_matrix
from crossmap.forest import ForestConfig, ImportanceRanking, select_top_k
from crossmap.pipeline import (
    PipelineError,
    per_target_seed,
    run_pipeline,
    write_similarity_csv,
)
from crossmap.regression import hierarchical_fit
from crossmap.report import (
    CrosswalkRow,
    CrosswalkTable,
    aggregate_spec_side,
    aggregate_standard_side,
    count_occurrences,
    emit_report,
    load_table_csv,
    save_table_csv,
)
from crossmap.similarity import SimilarityKind, make_dataset, similarity_matrix


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crossmap", description=__doc__)
    parser.add_argument("--version", action="version", version=f"crossmap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fetch", help="fetch embeddings for a corpus into a CSV matrix")
    p.add_argument("--corpus", required=True)
    p.add_argument("--side", choices=["standard", "specification"], required=True)
    p.add_argument("--endpoint", default="https://api.openai.com/v1")
    p.add_argument("--model", default="text-embedding-3-large")
    p.add_argument("--dimensions", type=int, default=3000)
    p.add_argument("--api-key-env", default="OPENAI_API_KEY")
    p.add_argument("--cache-dir", default=".embedding_cache")
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--out", required=True)

    p = sub.add_parser("similarity", help="emit the standards x specifications similarity matrix")
    p.add_argument("--std", required=True, help="standards embedding matrix CSV")
    p.add_argument("--spec", required=True, help="specifications embedding matrix CSV")
    p.add_argument("--kind", choices=["cosine", "pearson"], default="cosine")
    p.add_argument("--std-corpus", default=None, help="corpus JSON for row ids")
    p.add_argument("--spec-corpus", default=None, help="corpus JSON for column ids")
    p.add_argument("--out", required=True)

    p = sub.add_parser("select", help="rank specifications by forest importance per standard")
    p.add_argument("--std", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--trees", type=int, default=500)
    p.add_argument("--mtry", type=int, default=6)
    p.add_argument("--reps", type=int, default=25)
    p.add_argument("--min-leaf", type=int, default=5)
    p.add_argument("--top-k", type=int, default=3)
    p.add_argument("--out", required=True)

    p = sub.add_parser("regress", help="hierarchical no-intercept fits over selected predictors")
    p.add_argument("--std", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--ranking", required=True, help="ranking.json from `crossmap select`")
    p.add_argument("--std-corpus", default=None, help="corpus JSON for standard names")
    p.add_argument("--out", required=True)

    p = sub.add_parser("report", help="domain aggregates and report files from a crosswalk table")
    p.add_argument("--table", required=True)
    p.add_argument("--ccss-scheme", required=True, help="standards corpus JSON (domain scheme)")
    p.add_argument("--naep-link", required=True, help="specifications corpus JSON (domain link)")
    p.add_argument(
        "--standards-scheme",
        choices=["bundled", "id_prefix"],
        default="bundled",
        help="use the bundled domain grouping or regroup standards by id prefix",
    )
    p.add_argument("--format", choices=["csv", "markdown", "json"], default="markdown")
    p.add_argument("--out", required=True)

    p = sub.add_parser("run", help="run the full pipeline from a TOML config")
    p.add_argument("--config", required=True)

    p = sub.add_parser("serve", help="serve the review API over an artifacts directory")
    p.add_argument("--artifacts", required=True)
    p.add_argument("--bind", default="127.0.0.1:8000")
    p.add_argument("--ui-dir", default=None, help="built frontend assets to serve at /ui/")

    return parser


def cmd_fetch(args) -> int:
    corpus = load_corpus(args.corpus, Side(args.side))
    cfg = EmbeddingConfig(
        endpoint_url=args.endpoint,
        model_name=args.model,
        dimensions=args.dimensions,
        api_key_env=args.api_key_env,
        cache_dir=args.cache_dir,
        batch_size=args.batch_size,
    )
    save_matrix(fetch_embeddings(corpus, cfg), args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_similarity(args) -> int:
    std_corpus = load_corpus(args.std_corpus, Side.STANDARD) if args.std_corpus else None
    spec_corpus = load_corpus(args.spec_corpus, Side.SPECIFICATION) if args.spec_corpus else None
    std = load_matrix(args.std, side=Side.STANDARD, corpus=std_corpus)
    spec = load_matrix(args.spec, side=Side.SPECIFICATION, corpus=spec_corpus)
    sim = similarity_matrix(std, spec, SimilarityKind(args.kind))

    if std_corpus and spec_corpus:
        write_similarity_csv(sim, std_corpus, spec_corpus, Path(args.out))
    else:
        import csv

        with Path(args.out).open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([""] + [str(r) for r in sim.col_refs])
            for i, ref in enumerate(sim.row_refs):
                writer.writerow([str(ref)] + [f"{v:.12g}" for v in sim.values[i]])
    print(f"wrote {args.out}")
    return 0


def cmd_select(args) -> int:
    std = load_matrix(args.std, side=Side.STANDARD)
    spec = load_matrix(args.spec, side=Side.SPECIFICATION)
    base = ForestConfig(
        seed=args.seed,
        n_trees=args.trees,
        mtry=args.mtry,
        n_replications=args.reps,
        min_leaf=args.min_leaf,
        top_k=args.top_k,
    )
    rankings = []
    for ref in std.statement_refs:
        dataset = make_dataset(std, spec, ref)
        cfg = dataclasses.replace(base, seed=per_target_seed(args.seed, ref))
        rankings.append(select_top_k(dataset, cfg))
    Path(args.out).write_text(
        json.dumps({"rankings": [r.to_json() for r in rankings]}, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    print(f"wrote {args.out}")
    return 0


def cmd_regress(args) -> int:
    std_corpus = load_corpus(args.std_corpus, Side.STANDARD) if args.std_corpus else None
    std = load_matrix(args.std, side=Side.STANDARD, corpus=std_corpus)
    spec = load_matrix(args.spec, side=Side.SPECIFICATION)
    payload = json.loads(Path(args.ranking).read_text(encoding="utf-8"))
    rankings = [ImportanceRanking.from_json(r) for r in payload["rankings"]]
    rows = []
    for ranking in rankings:
        dataset = make_dataset(std, spec, ranking.target_ref)
        result = hierarchical_fit(dataset, ranking)
        name = std_corpus.statement(ranking.target_ref).id if std_corpus else str(ranking.target_ref)
        rows.append(CrosswalkRow(standard_id=name, result=result))
    save_table_csv(CrosswalkTable(rows=tuple(sorted(rows, key=lambda r: r.ref))), args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_report(args) -> int:
    standards = load_corpus(args.ccss_scheme, Side.STANDARD)
    specifications = load_corpus(args.naep_link, Side.SPECIFICATION)
    table = load_table_csv(args.table, corpus=standards)
    std_scheme = standards.scheme
    if args.standards_scheme == "id_prefix":
        std_scheme = scheme_from_id_prefixes(standards, CCSS_PREFIX_DOMAINS)
    aggregates = [
        aggregate_standard_side(table, std_scheme),
        aggregate_spec_side(table, specifications.scheme),
    ]
    counts = count_occurrences(table, spec_refs=specifications.ref_nums)
    emit_report(table, aggregates, counts, args.format, args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_run(args) -> int:
    out = run_pipeline(args.config)
    print(f"artifacts written to {out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from crossmap.server import create_app

    host, _, port = args.bind.rpartition(":")
    app = create_app(args.artifacts, ui_dir=args.ui_dir)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {
        "fetch": cmd_fetch,
        "similarity": cmd_similarity,
        "select": cmd_select,
        "regress": cmd_regress,
        "report": cmd_report,
        "run": cmd_run,
        "serve": cmd_serve,
    }[args.command]
    try:
        return handler(args)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - surface any stage failure nonzero
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
