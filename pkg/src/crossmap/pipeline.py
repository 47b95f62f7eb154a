"""End-to-end pipeline: corpora -> embeddings -> selection -> regression -> reports.

A single TOML config drives the run; every artifact lands in one output
directory together with a manifest (tool version, config snapshot, input
content hashes, master seed) sufficient to reproduce the run bit for bit
from a warm embedding cache.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import shutil
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from crossmap import __version__
from crossmap.corpus import (
    CCSS_PREFIX_DOMAINS,
    Corpus,
    Side,
    load_corpus,
    scheme_from_id_prefixes,
)
from crossmap.embeddings import EmbeddingConfig, fetch_embeddings, load_matrix, save_matrix
from crossmap.forest import ForestConfig, ImportanceRanking, select_top_k
from crossmap.regression import hierarchical_fit
from crossmap.report import (
    CrosswalkRow,
    CrosswalkTable,
    aggregate_spec_side,
    aggregate_standard_side,
    count_occurrences,
    emit_report,
)
from crossmap.similarity import SimilarityKind, SimilarityMatrix, make_dataset, similarity_matrix


class PipelineError(RuntimeError):
    """Stage failure; the message is prefixed with the stage name."""


@dataclass(frozen=True)
class PipelineConfig:
    standards_path: Path
    specifications_path: Path
    standards_scheme: str  # "bundled" or "id_prefix"
    embedding: EmbeddingConfig
    standards_matrix: Path | None
    specifications_matrix: Path | None
    forest: ForestConfig
    output_dir: Path
    report_formats: tuple[str, ...]

    @classmethod
    def from_toml(cls, path: str | Path) -> "PipelineConfig":
        path = Path(path)
        with path.open("rb") as fh:
            raw = tomllib.load(fh)
        base = path.parent

        def respath(value):
            if value is None:
                return None
            p = Path(value)
            return p if p.is_absolute() else base / p

        corpus = raw.get("corpus", {})
        emb = raw.get("embeddings", {})
        forest = raw.get("forest", {})
        output = raw.get("output", {})
        scheme = corpus.get("standards_scheme", "bundled")
        if scheme not in ("bundled", "id_prefix"):
            raise PipelineError(f"config: standards_scheme must be bundled or id_prefix, got {scheme!r}")
        return cls(
            standards_path=respath(corpus.get("standards", "data/ccss_g4_math.json")),
            specifications_path=respath(corpus.get("specifications", "data/naep_g4_math.json")),
            standards_scheme=scheme,
            embedding=EmbeddingConfig(
                endpoint_url=emb.get("endpoint_url", "https://api.openai.com/v1"),
                model_name=emb.get("model", "text-embedding-3-large"),
                dimensions=int(emb.get("dimensions", 3000)),
                api_key_env=emb.get("api_key_env", "OPENAI_API_KEY"),
                cache_dir=respath(emb.get("cache_dir", ".embedding_cache")),
                batch_size=int(emb.get("batch_size", 64)),
            ),
            standards_matrix=respath(emb.get("standards_matrix")),
            specifications_matrix=respath(emb.get("specifications_matrix")),
            forest=ForestConfig(
                seed=int(forest.get("seed", 0)),
                n_trees=int(forest.get("n_trees", 500)),
                mtry=int(forest.get("mtry", 6)),
                n_replications=int(forest.get("n_replications", 25)),
                min_leaf=int(forest.get("min_leaf", 5)),
                top_k=int(forest.get("top_k", 3)),
            ),
            output_dir=respath(output.get("dir", "artifacts")),
            report_formats=tuple(output.get("formats", ["csv", "markdown", "json"])),
        )


def per_target_seed(master_seed: int, target_ref: int) -> int:
    """Stable 64-bit sub-seed for one standard's forest selection."""
    state = np.random.SeedSequence((master_seed, target_ref)).generate_state(1, dtype=np.uint64)
    return int(state[0])


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_similarity_csv(
    sim: SimilarityMatrix, std: Corpus, spec: Corpus, path: Path
) -> None:
    """Similarity matrix with a header row/column of statement ids."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([""] + [spec.statement(r).id for r in sim.col_refs])
        for i, ref in enumerate(sim.row_refs):
            writer.writerow([std.statement(ref).id] + [f"{v:.12g}" for v in sim.values[i]])


def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(f"[{name}] {exc}") from exc


def obtain_matrices(cfg: PipelineConfig, std: Corpus, spec: Corpus):
    if cfg.standards_matrix is not None:
        std_mat = load_matrix(cfg.standards_matrix, corpus=std)
    else:
        std_mat = fetch_embeddings(std, cfg.embedding)
    if cfg.specifications_matrix is not None:
        spec_mat = load_matrix(cfg.specifications_matrix, corpus=spec)
    else:
        spec_mat = fetch_embeddings(spec, cfg.embedding)
    return std_mat, spec_mat


def run_pipeline(config_path: str | Path) -> Path:
    """Execute all stages; returns the artifacts directory.

    Artifacts: copies of both corpora, both embedding matrices, the cosine
    similarity matrix, all importance rankings, the crosswalk table, reports
    in the configured formats, and manifest.json.
    """
    cfg = PipelineConfig.from_toml(config_path)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)

    std = _stage("corpus", load_corpus, cfg.standards_path, Side.STANDARD)
    spec = _stage("corpus", load_corpus, cfg.specifications_path, Side.SPECIFICATION)
    std_scheme = std.scheme
    if cfg.standards_scheme == "id_prefix":
        std_scheme = _stage("corpus", scheme_from_id_prefixes, std, CCSS_PREFIX_DOMAINS)
    shutil.copyfile(cfg.standards_path, out / "corpus_standards.json")
    shutil.copyfile(cfg.specifications_path, out / "corpus_specifications.json")

    std_mat, spec_mat = _stage("embeddings", obtain_matrices, cfg, std, spec)
    save_matrix(std_mat, out / "standards_embeddings.csv")
    save_matrix(spec_mat, out / "specifications_embeddings.csv")

    sim = _stage("similarity", similarity_matrix, std_mat, spec_mat, SimilarityKind.COSINE)
    write_similarity_csv(sim, std, spec, out / "similarity_cosine.csv")

    def select_all() -> list[ImportanceRanking]:
        rankings = []
        for ref in std.ref_nums:
            dataset = make_dataset(std_mat, spec_mat, ref)
            target_cfg = dataclasses.replace(
                cfg.forest, seed=per_target_seed(cfg.forest.seed, ref)
            )
            rankings.append(select_top_k(dataset, target_cfg))
        return rankings

    rankings = _stage("select", select_all)
    (out / "rankings.json").write_text(
        json.dumps({"rankings": [r.to_json() for r in rankings]}, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )

    def regress_all() -> CrosswalkTable:
        rows = []
        for ranking in rankings:
            dataset = make_dataset(std_mat, spec_mat, ranking.target_ref)
            result = hierarchical_fit(dataset, ranking)
            rows.append(
                CrosswalkRow(standard_id=std.statement(ranking.target_ref).id, result=result)
            )
        return CrosswalkTable(rows=tuple(rows))

    table = _stage("regress", regress_all)

    def report_all():
        aggregates = [
            aggregate_standard_side(table, std_scheme),
            aggregate_spec_side(table, spec.scheme),
        ]
        counts = count_occurrences(table, spec_refs=spec.ref_nums)
        suffix = {"csv": "csv", "markdown": "md", "json": "json"}
        for fmt in cfg.report_formats:
            emit_report(table, aggregates, counts, fmt, out / f"crosswalk_table.{suffix.get(fmt, fmt)}")

    _stage("report", report_all)

    manifest = {
        "tool_version": __version__,
        "created_at": datetime.now(timezone.utc).isoformat(),
        "master_seed": cfg.forest.seed,
        "config": {
            "standards": str(cfg.standards_path),
            "specifications": str(cfg.specifications_path),
            "standards_scheme": cfg.standards_scheme,
            "embedding": {
                "endpoint_url": cfg.embedding.endpoint_url,
                "model": cfg.embedding.model_name,
                "dimensions": cfg.embedding.dimensions,
                "api_key_env": cfg.embedding.api_key_env,
                "batch_size": cfg.embedding.batch_size,
            },
            "forest": dataclasses.asdict(cfg.forest),
            "report_formats": list(cfg.report_formats),
        },
        "input_hashes": {
            "standards": sha256_file(cfg.standards_path),
            "specifications": sha256_file(cfg.specifications_path),
            "standards_matrix": sha256_file(out / "standards_embeddings.csv"),
            "specifications_matrix": sha256_file(out / "specifications_embeddings.csv"),
        },
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return out
