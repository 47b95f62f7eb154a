"""Embedding acquisition with deterministic on-disk caching and CSV matrices.

Vectors come from an OpenAI-compatible ``POST {endpoint}/embeddings`` service.
Every text's vector is cached under a key derived from (model, dimensions,
normalized text), so a warm cache makes the whole pipeline reproducible and
testable offline.  Matrices are stored as headerless CSV with one row per
embedding attribute and one column per statement (the transposed layout the
downstream regressions expect).
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import time
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import requests

from crossmap.corpus import Corpus, Side, normalize_whitespace

RETRY_ATTEMPTS = 3
RETRY_BASE_DELAY = 1.0  # seconds; doubles per retry
RETRYABLE_STATUS = frozenset({429, *range(500, 600)})

UNIT_NORM_TOL = 1e-3
MEAN_WARN_TOL = 0.01


class EmbeddingServiceError(RuntimeError):
    """Transport, auth, or response-shape failure while fetching embeddings."""


class MatrixFormatError(ValueError):
    """Raised when a matrix CSV is ragged, non-numeric, or inconsistent."""


@dataclass(frozen=True)
class EmbeddingConfig:
    """Connection and caching parameters for the embeddings service."""

    endpoint_url: str
    model_name: str
    dimensions: int = 3000
    api_key_env: str = "OPENAI_API_KEY"
    cache_dir: str | Path = ".embedding_cache"
    batch_size: int = 64

    def __post_init__(self) -> None:
        if self.dimensions < 2:
            raise ValueError(f"dimensions must be >= 2, got {self.dimensions}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Column-per-statement matrix of unit-norm embedding vectors."""

    side: Side
    values: np.ndarray  # shape (n_dims, m_statements)
    statement_refs: tuple[int, ...]

    def __post_init__(self) -> None:
        v = self.values
        if v.ndim != 2:
            raise ValueError(f"matrix must be 2-d, got shape {v.shape}")
        if len(self.statement_refs) != v.shape[1]:
            raise ValueError(
                f"{len(self.statement_refs)} statement refs for {v.shape[1]} columns"
            )
        if not np.all(np.isfinite(v)):
            bad = np.argwhere(~np.isfinite(v))[0]
            raise ValueError(f"non-finite entry at row {bad[0] + 1}, column {bad[1] + 1}")
        norms = np.linalg.norm(v, axis=0)
        off = np.abs(norms - 1.0)
        if off.max(initial=0.0) > UNIT_NORM_TOL:
            j = int(np.argmax(off))
            raise ValueError(
                f"column {j + 1} (ref {self.statement_refs[j]}) has norm {norms[j]:.6f}, "
                f"expected 1 within {UNIT_NORM_TOL}"
            )
        means = np.abs(v.mean(axis=0))
        if means.max(initial=0.0) > MEAN_WARN_TOL:
            j = int(np.argmax(means))
            warnings.warn(
                f"column {j + 1} mean {v.mean(axis=0)[j]:+.4f} exceeds {MEAN_WARN_TOL}; "
                "cosine and Pearson similarity may diverge for this provider",
                stacklevel=2,
            )

    @property
    def n_dims(self) -> int:
        return int(self.values.shape[0])

    @property
    def m_statements(self) -> int:
        return int(self.values.shape[1])

    def column(self, ref_num: int) -> np.ndarray:
        try:
            j = self.statement_refs.index(ref_num)
        except ValueError:
            raise KeyError(f"ref_num {ref_num} not in matrix (refs {self.statement_refs[:5]}...)")
        return self.values[:, j]


def cache_key(model_name: str, dimensions: int, text: str) -> str:
    """Cache key for one text: depends only on model, dimensions, normalized text."""
    normalized = normalize_whitespace(text)
    digest = hashlib.sha256(
        f"{model_name}\x00{dimensions}\x00{normalized}".encode("utf-8")
    ).hexdigest()
    return digest


def _cache_path(cfg: EmbeddingConfig, key: str) -> Path:
    return Path(cfg.cache_dir) / f"{key}.json"


def _cache_read(cfg: EmbeddingConfig, key: str) -> list[float] | None:
    path = _cache_path(cfg, key)
    if not path.exists():
        return None
    payload = json.loads(path.read_text(encoding="utf-8"))
    vec = payload["embedding"]
    if len(vec) != cfg.dimensions:
        raise EmbeddingServiceError(
            f"cache entry {path.name} has {len(vec)} dims, config wants {cfg.dimensions}"
        )
    return vec


def _cache_write(cfg: EmbeddingConfig, key: str, embedding: list[float]) -> None:
    # Atomic replace: concurrent writers of the same key are last-writer-wins,
    # which is harmless because content is identical for identical keys.
    path = _cache_path(cfg, key)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(f".tmp.{os.getpid()}")
    tmp.write_text(
        json.dumps({"model": cfg.model_name, "dimensions": cfg.dimensions, "embedding": embedding}),
        encoding="utf-8",
    )
    os.replace(tmp, path)


def _post_batch(cfg: EmbeddingConfig, texts: list[str], refs: list[int], api_key: str) -> list[list[float]]:
    url = cfg.endpoint_url.rstrip("/") + "/embeddings"
    body = {"model": cfg.model_name, "input": texts, "dimensions": cfg.dimensions}
    headers = {"Authorization": f"Bearer {api_key}", "Content-Type": "application/json"}

    resp = None
    for attempt in range(RETRY_ATTEMPTS):
        try:
            resp = requests.post(url, json=body, headers=headers, timeout=120)
        except requests.RequestException as exc:
            raise EmbeddingServiceError(f"request to {url} failed: {exc}") from exc
        if resp.status_code in RETRYABLE_STATUS and attempt < RETRY_ATTEMPTS - 1:
            time.sleep(RETRY_BASE_DELAY * 2**attempt)
            continue
        break
    assert resp is not None
    if resp.status_code != 200:
        raise EmbeddingServiceError(
            f"embeddings request failed with HTTP {resp.status_code} after "
            f"{RETRY_ATTEMPTS if resp.status_code in RETRYABLE_STATUS else 1} attempt(s): "
            f"{resp.text[:200]}"
        )

    try:
        data = resp.json()["data"]
    except (ValueError, KeyError) as exc:
        raise EmbeddingServiceError(f"malformed response from {url}: {exc}") from exc

    by_index: dict[int, list[float]] = {}
    for item in data:
        by_index[int(item["index"])] = item["embedding"]

    vectors: list[list[float]] = []
    bad_refs: list[int] = []
    for i, ref in enumerate(refs):
        vec = by_index.get(i)
        if vec is None or len(vec) != cfg.dimensions:
            bad_refs.append(ref)
            vectors.append([])
        else:
            vectors.append(vec)
    if bad_refs:
        raise EmbeddingServiceError(
            f"service returned missing or wrong-length vectors (expected {cfg.dimensions} dims) "
            f"for ref_nums {bad_refs}"
        )
    return vectors


def fetch_embeddings(corpus: Corpus, cfg: EmbeddingConfig) -> EmbeddingMatrix:
    """One unit-norm embedding column per statement, in ref_num order.

    Cache hits never touch the network; cache misses are fetched in batches
    and written through, so a second call is served entirely from disk.
    """
    keys = [cache_key(cfg.model_name, cfg.dimensions, s.text) for s in corpus.statements]
    vectors: list[list[float] | None] = [_cache_read(cfg, k) for k in keys]

    misses = [i for i, v in enumerate(vectors) if v is None]
    if misses:
        api_key = os.environ.get(cfg.api_key_env, "")
        if not api_key:
            raise EmbeddingServiceError(
                f"{len(misses)} statement(s) missing from cache and environment variable "
                f"{cfg.api_key_env!r} is not set"
            )
        for start in range(0, len(misses), cfg.batch_size):
            chunk = misses[start : start + cfg.batch_size]
            texts = [corpus.statements[i].text for i in chunk]
            refs = [corpus.statements[i].ref_num for i in chunk]
            fetched = _post_batch(cfg, texts, refs, api_key)
            for i, vec in zip(chunk, fetched):
                _cache_write(cfg, keys[i], vec)
                vectors[i] = vec

    values = np.array(vectors, dtype=np.float64).T  # (n_dims, m)
    if not np.all(np.isfinite(values)):
        bad_cols = sorted({int(j) + 1 for j in np.argwhere(~np.isfinite(values))[:, 1]})
        raise EmbeddingServiceError(f"non-finite embedding values for ref_nums {bad_cols}")
    norms = np.linalg.norm(values, axis=0)
    if np.any(norms == 0):
        bad = [corpus.statements[int(j)].ref_num for j in np.flatnonzero(norms == 0)]
        raise EmbeddingServiceError(f"zero-norm embedding for ref_nums {bad}")
    values /= norms  # exact unit columns; removes provider rounding
    return EmbeddingMatrix(side=corpus.side, values=values, statement_refs=tuple(corpus.ref_nums))


def save_matrix(mat: EmbeddingMatrix, path: str | Path) -> None:
    """Write a matrix as headerless CSV, rows = attributes, columns = statements."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # %.17g round-trips float64 exactly, comfortably above the 12-digit contract.
    with path.open("w", encoding="utf-8", newline="") as fh:
        for row in mat.values:
            fh.write(",".join(f"{x:.17g}" for x in row))
            fh.write("\n")


def load_matrix(
    path: str | Path,
    side: Side = Side.STANDARD,
    corpus: Corpus | None = None,
) -> EmbeddingMatrix:
    """Load a headerless CSV matrix; errors name the offending row/column.

    With a corpus supplied, the column count is checked against it and the
    matrix adopts the corpus side and ref numbering.
    """
    path = Path(path)
    rows: list[list[float]] = []
    width: int | None = None
    with path.open("r", encoding="utf-8", newline="") as fh:
        for r, record in enumerate(csv.reader(fh), start=1):
            if not record:
                continue
            if width is None:
                width = len(record)
            elif len(record) != width:
                raise MatrixFormatError(
                    f"{path}: row {r} has {len(record)} cells, expected {width}"
                )
            parsed: list[float] = []
            for c, cell in enumerate(record, start=1):
                try:
                    x = float(cell)
                except ValueError:
                    raise MatrixFormatError(
                        f"{path}: non-numeric cell at row {r}, column {c}: {cell!r}"
                    ) from None
                if not np.isfinite(x):
                    raise MatrixFormatError(f"{path}: non-finite value at row {r}, column {c}")
                parsed.append(x)
            rows.append(parsed)
    if not rows:
        raise MatrixFormatError(f"{path}: empty matrix file")

    values = np.array(rows, dtype=np.float64)
    if corpus is not None:
        if values.shape[1] != len(corpus):
            raise MatrixFormatError(
                f"{path}: {values.shape[1]} columns but corpus has {len(corpus)} statements"
            )
        side = corpus.side
        refs = tuple(corpus.ref_nums)
    else:
        refs = tuple(range(1, values.shape[1] + 1))
    return EmbeddingMatrix(side=side, values=values, statement_refs=refs)
