"""Univariate similarity between statements and regression-ready datasets.

Statements are compared through their embedding columns: cosine for
unit-scaled vectors, Pearson as the mean-centered variant.  Because the
embedding attributes play the role of observations, one standard regressed on
all specifications is just an n-case, m-predictor least-squares problem; this
module assembles that design matrix.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from crossmap.embeddings import EmbeddingMatrix


class SimilarityKind(enum.Enum):
    COSINE = "cosine"
    PEARSON = "pearson"


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine of the angle between two vectors, in [-1, 1]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError(f"length mismatch: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine undefined for zero-norm input")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def pearson(u: np.ndarray, v: np.ndarray) -> float:
    """Pearson correlation: the cosine of the mean-centered vectors."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError(f"length mismatch: {u.shape} vs {v.shape}")
    uc = u - u.mean()
    vc = v - v.mean()
    nu = np.linalg.norm(uc)
    nv = np.linalg.norm(vc)
    # relative threshold: a numerically constant vector centers to rounding dust
    if nu <= 1e-12 * np.linalg.norm(u) or nv <= 1e-12 * np.linalg.norm(v):
        raise ValueError("pearson undefined for a constant vector")
    return float(np.clip(np.dot(uc, vc) / (nu * nv), -1.0, 1.0))


@dataclass(frozen=True)
class SimilarityMatrix:
    """All standard x specification similarities of one kind."""

    values: np.ndarray  # (n_standards, n_specifications)
    kind: SimilarityKind
    row_refs: tuple[int, ...]
    col_refs: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.values.ndim != 2:
            raise ValueError(f"similarity values must be 2-d, got {self.values.shape}")
        if self.values.shape != (len(self.row_refs), len(self.col_refs)):
            raise ValueError(
                f"shape {self.values.shape} does not match "
                f"{len(self.row_refs)} row refs x {len(self.col_refs)} col refs"
            )
        if np.any(np.abs(self.values) > 1.0 + 1e-12):
            raise ValueError("similarity entries must lie in [-1, 1]")

    def row(self, standard_ref: int) -> np.ndarray:
        try:
            i = self.row_refs.index(standard_ref)
        except ValueError:
            raise KeyError(f"unknown standard ref {standard_ref}")
        return self.values[i]


def similarity_matrix(
    std: EmbeddingMatrix, spec: EmbeddingMatrix, kind: SimilarityKind = SimilarityKind.COSINE
) -> SimilarityMatrix:
    """Entry (i, j) is kind(standard_i, specification_j)."""
    if std.n_dims != spec.n_dims:
        raise ValueError(f"dimension mismatch: {std.n_dims} vs {spec.n_dims}")
    a = std.values
    b = spec.values
    if kind is SimilarityKind.PEARSON:
        raw_na = np.linalg.norm(a, axis=0)
        raw_nb = np.linalg.norm(b, axis=0)
        a = a - a.mean(axis=0, keepdims=True)
        b = b - b.mean(axis=0, keepdims=True)
        na = np.linalg.norm(a, axis=0)
        nb = np.linalg.norm(b, axis=0)
        if np.any(na <= 1e-12 * raw_na) or np.any(nb <= 1e-12 * raw_nb):
            raise ValueError("pearson undefined for a constant column")
        a = a / na
        b = b / nb
    else:
        a = a / np.linalg.norm(a, axis=0)
        b = b / np.linalg.norm(b, axis=0)
    values = np.clip(a.T @ b, -1.0, 1.0)
    return SimilarityMatrix(
        values=values,
        kind=kind,
        row_refs=tuple(std.statement_refs),
        col_refs=tuple(spec.statement_refs),
    )


def rank_candidates(sim: SimilarityMatrix, standard_ref: int) -> list[tuple[int, float]]:
    """All specifications sorted by similarity, highest first.

    Ties break toward the lower specification ref so rankings are
    reproducible run to run.
    """
    row = sim.row(standard_ref)
    refs = np.asarray(sim.col_refs)
    order = np.lexsort((refs, -row))
    return [(int(refs[j]), float(row[j])) for j in order]


@dataclass(frozen=True)
class RegressionDataset:
    """One standard's embedding regressed on every specification's embedding.

    The embedding attributes are the cases: n rows, one response column, m
    predictor columns in specification ref order.
    """

    response: np.ndarray  # (n,)
    predictors: np.ndarray  # (n, m)
    target_ref: int
    predictor_refs: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.response.ndim != 1 or self.predictors.ndim != 2:
            raise ValueError("response must be 1-d and predictors 2-d")
        if self.response.shape[0] != self.predictors.shape[0]:
            raise ValueError(
                f"response has {self.response.shape[0]} cases, "
                f"predictors have {self.predictors.shape[0]}"
            )
        if len(self.predictor_refs) != self.predictors.shape[1]:
            raise ValueError("predictor_refs must label every predictor column")

    @property
    def n(self) -> int:
        return int(self.response.shape[0])

    @property
    def m(self) -> int:
        return int(self.predictors.shape[1])

    def predictor_column(self, spec_ref: int) -> np.ndarray:
        try:
            j = self.predictor_refs.index(spec_ref)
        except ValueError:
            raise KeyError(f"unknown specification ref {spec_ref}")
        return self.predictors[:, j]


def make_dataset(
    std: EmbeddingMatrix, spec: EmbeddingMatrix, standard_ref: int
) -> RegressionDataset:
    """Dataset for regressing one standard onto all specifications."""
    if std.n_dims != spec.n_dims:
        raise ValueError(f"dimension mismatch: {std.n_dims} vs {spec.n_dims}")
    response = std.column(standard_ref).copy()
    return RegressionDataset(
        response=response,
        predictors=spec.values.copy(),
        target_ref=standard_ref,
        predictor_refs=tuple(spec.statement_refs),
    )
