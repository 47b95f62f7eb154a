#!/usr/bin/env python3
"""Narrative walkthrough of the crosswalk pipeline on the archived matrices.

Runs in ~10 seconds: similarity ranking for one standard, forest selection
and hierarchical regression for two standards, then the domain aggregates of
the full published table. Run from the repo root:

    python demos/crosswalk_walkthrough.py
"""

from pathlib import Path

from crossmap.corpus import Side, load_corpus
from crossmap.embeddings import load_matrix
from crossmap.forest import ForestConfig, select_top_k
from crossmap.regression import hierarchical_fit
from crossmap.report import (
    aggregate_spec_side,
    aggregate_standard_side,
    count_occurrences,
    load_table_csv,
)
from crossmap.similarity import make_dataset, rank_candidates, similarity_matrix

ROOT = Path(__file__).resolve().parent.parent

print("== Load the two corpora and the archived embedding matrices ==")
standards = load_corpus(ROOT / "data" / "ccss_g4_math.json", Side.STANDARD)
specifications = load_corpus(ROOT / "data" / "naep_g4_math.json", Side.SPECIFICATION)
std_mat = load_matrix(ROOT / "fixtures/archived_run/ccss_embeddings.csv", corpus=standards)
spec_mat = load_matrix(ROOT / "fixtures/archived_run/naep_embeddings.csv", corpus=specifications)
print(f"standards: {std_mat.n_dims} dims x {std_mat.m_statements} columns")
print(f"specifications: {spec_mat.n_dims} dims x {spec_mat.m_statements} columns\n")

print("== Univariate view: candidates for one standard, best first ==")
target = 13
sim = similarity_matrix(std_mat, spec_mat)
print(f"standard {target}: {standards.statement(target).id}")
for ref, value in rank_candidates(sim, target)[:5]:
    text = specifications.statement(ref).text
    print(f"  spec {ref:>2}  sim={value:+.3f}  {text[:64]}...")
print()

print("== Multivariate view: forest selection + hierarchical R^2 ==")
for target in (13, 4):
    dataset = make_dataset(std_mat, spec_mat, target)
    cfg = ForestConfig(seed=20260801 + target, n_trees=40, mtry=6, n_replications=2, min_leaf=150)
    ranking = select_top_k(dataset, cfg)
    fit = hierarchical_fit(dataset, ranking)
    r2 = ", ".join(f"{v:.2f}" for v in fit.r2)
    print(f"standard {target} ({standards.statement(target).id}): "
          f"selected {ranking.selected}, stepwise R^2 = ({r2})")
print()

print("== Aggregate view: domain shares of the published crosswalk table ==")
table = load_table_csv(ROOT / "fixtures/table1_published.csv", corpus=standards)
top = aggregate_standard_side(table, standards.scheme)
bottom = aggregate_spec_side(table, specifications.scheme)
for agg in (top, bottom):
    print(f"{agg.side.value} side:")
    for _, name, weight, percent in agg.per_domain:
        print(f"  {name:<45} {weight:6.2f}  {percent:5.1f}%")
counts = count_occurrences(table, spec_refs=specifications.ref_nums)
heavy = sorted(counts.per_spec, key=lambda t: -t[1])[:4]
share = 100.0 * sum(c for _, c in heavy) / counts.total_slots
print(f"\nfour busiest specifications {[r for r, _ in heavy]} fill "
      f"{sum(c for _, c in heavy)} of {counts.total_slots} slots ({share:.0f}%)")
