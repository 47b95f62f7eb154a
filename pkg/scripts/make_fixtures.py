#!/usr/bin/env python3
"""Regenerate the checked-in numeric fixtures (deterministic; run from repo root).

Outputs:
  fixtures/ccss_unit_test_8x5.csv      small unit-column matrix for I/O tests
  fixtures/simcheck.csv                two-column similarity check pair; the
                                       50-digit cosine/pearson reference values
                                       are printed so tests can freeze them
  fixtures/archived_run/*.csv          archived embedding matrices whose
                                       geometry reproduces the stepwise R^2
                                       rows of fixtures/table1_published.csv

The archive is synthetic by necessity: live embedding services are
nondeterministic across model revisions, so characterization tests pin a
matrix pair constructed to have the published crosswalk geometry.  The 49
specification columns are exactly orthonormal; each standard column is the
unit-norm combination of its three selected specification columns (weighted
by the square roots of the published R^2 increments) plus an orthogonal
residual carrying the unexplained variance.
"""

from __future__ import annotations

import csv
import sys
from pathlib import Path

import mpmath
import numpy as np

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from crossmap.corpus import Side, load_corpus  # noqa: E402
from crossmap.embeddings import EmbeddingMatrix, save_matrix  # noqa: E402
from crossmap.regression import hierarchical_fit  # noqa: E402
from crossmap.similarity import make_dataset  # noqa: E402

SEED = 20260801
N_DIMS = 3000
FIXTURES = ROOT / "fixtures"


def unit_columns(rng: np.random.Generator, n: int, m: int) -> np.ndarray:
    v = rng.standard_normal((n, m))
    return v / np.linalg.norm(v, axis=0)


def write_unit_test_matrix(rng: np.random.Generator) -> None:
    values = unit_columns(rng, 8, 5)
    mat = EmbeddingMatrix(side=Side.STANDARD, values=values, statement_refs=tuple(range(1, 6)))
    save_matrix(mat, FIXTURES / "ccss_unit_test_8x5.csv")


def write_simcheck(rng: np.random.Generator) -> None:
    # A correlated pair with deliberately nonzero means, so cosine and
    # pearson differ visibly and both references are worth freezing.
    n = 64
    base = rng.standard_normal(n)
    u = base + 0.15
    v = 0.6 * base + 0.8 * rng.standard_normal(n) - 0.1
    u /= np.linalg.norm(u)
    v /= np.linalg.norm(v)
    path = FIXTURES / "simcheck.csv"
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for a, b in zip(u, v):
            w.writerow([f"{a:.17g}", f"{b:.17g}"])

    mpmath.mp.dps = 50
    mu = [mpmath.mpf(float(a)) for a in u]
    mv = [mpmath.mpf(float(b)) for b in v]
    dot = mpmath.fsum(a * b for a, b in zip(mu, mv))
    nu = mpmath.sqrt(mpmath.fsum(a * a for a in mu))
    nv = mpmath.sqrt(mpmath.fsum(b * b for b in mv))
    um = mpmath.fsum(mu) / n
    vm = mpmath.fsum(mv) / n
    cdot = mpmath.fsum((a - um) * (b - vm) for a, b in zip(mu, mv))
    cnu = mpmath.sqrt(mpmath.fsum((a - um) ** 2 for a in mu))
    cnv = mpmath.sqrt(mpmath.fsum((b - vm) ** 2 for b in mv))
    print("simcheck cosine  =", mpmath.nstr(dot / (nu * nv), 30))
    print("simcheck pearson =", mpmath.nstr(cdot / (cnu * cnv), 30))


def load_published_rows() -> list[dict]:
    rows = []
    with (FIXTURES / "table1_published.csv").open(encoding="utf-8", newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append(
                {
                    "ref": int(rec["ref"]),
                    "steps": (int(rec["spec1"]), int(rec["spec2"]), int(rec["spec3"])),
                    "r2": (float(rec["r2_1"]), float(rec["r2_2"]), float(rec["r2_3"])),
                }
            )
    return rows


def write_archived_run(rng: np.random.Generator) -> None:
    rows = load_published_rows()
    n_std = len(rows)
    n_spec = 49

    specs, _ = np.linalg.qr(rng.standard_normal((N_DIMS, n_spec)))

    std = np.zeros((N_DIMS, n_std))
    for i, row in enumerate(rows):
        r1, r2, r3 = row["r2"]
        weights = (np.sqrt(r1), np.sqrt(r2 - r1), np.sqrt(r3 - r2))
        z = rng.standard_normal(N_DIMS)
        z -= specs @ (specs.T @ z)
        z /= np.linalg.norm(z)
        y = np.sqrt(1.0 - r3) * z
        for w, s in zip(weights, row["steps"]):
            y += w * specs[:, s - 1]
        std[:, i] = y / np.linalg.norm(y)

    out = FIXTURES / "archived_run"
    ccss = load_corpus(ROOT / "data" / "ccss_g4_math.json", Side.STANDARD)
    naep = load_corpus(ROOT / "data" / "naep_g4_math.json", Side.SPECIFICATION)
    std_mat = EmbeddingMatrix(side=Side.STANDARD, values=std, statement_refs=tuple(ccss.ref_nums))
    spec_mat = EmbeddingMatrix(
        side=Side.SPECIFICATION, values=specs, statement_refs=tuple(naep.ref_nums)
    )
    save_matrix(std_mat, out / "ccss_embeddings.csv")
    save_matrix(spec_mat, out / "naep_embeddings.csv")

    # sanity: the hierarchical fit over each row's published selection must
    # land on the published R^2 values almost exactly
    worst = 0.0
    for row in rows:
        ds = make_dataset(std_mat, spec_mat, row["ref"])
        res = hierarchical_fit(ds, row["steps"])
        worst = max(worst, max(abs(a - b) for a, b in zip(res.r2, row["r2"])))
    print(f"archived_run worst |R2 - published| = {worst:.3e}")
    assert worst < 1e-10


def main() -> None:
    rng = np.random.default_rng(SEED)
    write_unit_test_matrix(rng)
    write_simcheck(rng)
    write_archived_run(rng)
    print("fixtures written under", FIXTURES)


if __name__ == "__main__":
    main()
