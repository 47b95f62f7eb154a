"""Crosswalk table assembly, domain aggregation, and report emission.

The crosswalk table holds one stepwise-regression row per standard (the
shape of the study's main results table).  Two aggregate views summarize it:
on the standards side the final R^2 of each row is treated as a weight and
summed within the standard's domain; on the specifications side each
unique-variance increment is routed to the domain of the specification that
earned it.  Both are expressed as percent shares of total weight.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

from crossmap.corpus import Corpus, DomainScheme, Side
from crossmap.regression import StepwiseResult, stepwise_from_r2


def round_half_up(x: float) -> int:
    """Round to the nearest integer, halves upward (display convention)."""
    return int(math.floor(x + 0.5))


class ReportError(ValueError):
    pass


@dataclass(frozen=True)
class CrosswalkRow:
    standard_id: str
    result: StepwiseResult

    @property
    def ref(self) -> int:
        return self.result.target_ref


@dataclass(frozen=True)
class CrosswalkTable:
    """One row per standard, ordered by ref_num."""

    rows: tuple[CrosswalkRow, ...]

    def __post_init__(self) -> None:
        refs = [r.ref for r in self.rows]
        if len(refs) != len(set(refs)):
            raise ReportError(f"duplicate standard refs in table: {sorted(refs)}")
        if refs != sorted(refs):
            raise ReportError("table rows must be ordered by standard ref")

    def __len__(self) -> int:
        return len(self.rows)

    def row(self, ref: int) -> CrosswalkRow:
        for r in self.rows:
            if r.ref == ref:
                return r
        raise KeyError(f"no row for standard ref {ref}")


@dataclass(frozen=True)
class DomainAggregate:
    """Per-domain weight sums and percent shares for one side."""

    side: Side
    per_domain: tuple[tuple[int, str, float, float], ...]  # (id, name, weight_sum, percent)
    total_weight: float

    def percents_rounded(self) -> list[int]:
        return [round_half_up(p) for _, _, _, p in self.per_domain]

    def weight_of(self, domain_id: int) -> float:
        for did, _, w, _ in self.per_domain:
            if did == domain_id:
                return w
        raise KeyError(f"no domain {domain_id}")


@dataclass(frozen=True)
class OccurrenceCount:
    """How often each specification ref occupies a selection slot."""

    per_spec: tuple[tuple[int, int], ...]  # (spec_ref, count), ascending ref
    total_slots: int

    def count_of(self, spec_ref: int) -> int:
        for ref, c in self.per_spec:
            if ref == spec_ref:
                return c
        raise KeyError(f"spec ref {spec_ref} not tracked")


def aggregate_standard_side(table: CrosswalkTable, scheme: DomainScheme) -> DomainAggregate:
    """Sum each row's final R^2 into the standard's domain, as percents."""
    if scheme.side is not Side.STANDARD:
        raise ReportError("aggregate_standard_side needs the standards-side scheme")
    if not table.rows:
        raise ReportError("cannot aggregate an empty table")
    weights: dict[int, list[float]] = {did: [] for did, _, _ in scheme.domains}
    for row in table.rows:
        weights[scheme.domain_of(row.ref)].append(row.result.final_r2)
    sums = {did: math.fsum(ws) for did, ws in weights.items()}
    total = math.fsum(sums.values())
    if total <= 0:
        raise ReportError("total weight is zero; percents undefined")
    return DomainAggregate(
        side=Side.STANDARD,
        per_domain=tuple(
            (did, name, sums[did], 100.0 * sums[did] / total) for did, name, _ in scheme.domains
        ),
        total_weight=total,
    )


def aggregate_spec_side(table: CrosswalkTable, link: DomainScheme) -> DomainAggregate:
    """Route each step's unique-variance increment to its specification's domain."""
    if link.side is not Side.SPECIFICATION:
        raise ReportError("aggregate_spec_side needs the specifications-side scheme")
    if not table.rows:
        raise ReportError("cannot aggregate an empty table")
    parts: dict[int, list[float]] = {did: [] for did, _, _ in link.domains}
    for row in table.rows:
        for spec_ref, inc in zip(row.result.steps, row.result.increments):
            parts[link.domain_of(spec_ref)].append(inc)
    sums = {did: math.fsum(ws) for did, ws in parts.items()}
    total = math.fsum(v for ws in parts.values() for v in ws)
    if total <= 0:
        raise ReportError("total weight is zero; percents undefined")
    return DomainAggregate(
        side=Side.SPECIFICATION,
        per_domain=tuple(
            (did, name, sums[did], 100.0 * sums[did] / total) for did, name, _ in link.domains
        ),
        total_weight=total,
    )


def count_occurrences(table: CrosswalkTable, spec_refs=None) -> OccurrenceCount:
    """Tally how many selection slots each specification occupies.

    ``spec_refs`` widens the tally to a full universe of refs (zeros
    included); by default only refs that occur are reported.
    """
    counts: dict[int, int] = {int(r): 0 for r in (spec_refs or [])}
    total = 0
    for row in table.rows:
        for spec_ref in row.result.steps:
            counts[spec_ref] = counts.get(spec_ref, 0) + 1
            total += 1
    return OccurrenceCount(
        per_spec=tuple(sorted(counts.items())),
        total_slots=total,
    )


# ---------------------------------------------------------------------------
# Table serialization

_CSV_FIELDS = ["name", "ref", "spec1", "spec2", "spec3", "r2_1", "r2_2", "r2_3", "increase"]


def save_table_csv(table: CrosswalkTable, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_CSV_FIELDS)
        for row in table.rows:
            res = row.result
            steps = list(res.steps) + [""] * (3 - len(res.steps))
            r2 = [f"{v:.12g}" for v in res.r2] + [""] * (3 - len(res.r2))
            writer.writerow(
                [row.standard_id, res.target_ref, *steps, *r2, f"{res.step13_increase:.12g}"]
            )


def load_table_csv(path: str | Path, corpus: Corpus | None = None) -> CrosswalkTable:
    """Read a crosswalk table CSV (the ``name`` column is optional).

    Increments are reconstructed as the successive differences of the step
    R^2 columns; a stored ``increase`` column is display-only and ignored.
    """
    path = Path(path)
    rows: list[CrosswalkRow] = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ReportError(f"{path}: empty table file")
        missing = {"ref", "spec1", "r2_1"} - set(reader.fieldnames)
        if missing:
            raise ReportError(f"{path}: missing columns {sorted(missing)}")
        for i, rec in enumerate(reader, start=2):
            try:
                ref = int(rec["ref"])
                steps = tuple(
                    int(rec[f"spec{k}"]) for k in (1, 2, 3) if rec.get(f"spec{k}", "") != ""
                )
                r2 = tuple(
                    float(rec[f"r2_{k}"]) for k in (1, 2, 3) if rec.get(f"r2_{k}", "") != ""
                )
            except (KeyError, ValueError) as exc:
                raise ReportError(f"{path}: line {i}: {exc}") from exc
            if len(steps) != len(r2):
                raise ReportError(f"{path}: line {i}: {len(steps)} steps but {len(r2)} r2 values")
            name = rec.get("name") or (corpus.statement(ref).id if corpus else str(ref))
            rows.append(CrosswalkRow(standard_id=name, result=stepwise_from_r2(ref, steps, r2)))
    rows.sort(key=lambda r: r.ref)
    return CrosswalkTable(rows=tuple(rows))


def table_to_json(table: CrosswalkTable) -> list[dict]:
    return [
        {
            "standard_id": row.standard_id,
            "ref": row.result.target_ref,
            "steps": list(row.result.steps),
            "r2": list(row.result.r2),
            "increments": list(row.result.increments),
            "step13_increase": row.result.step13_increase,
            "collinear_steps": list(row.result.collinear_steps),
        }
        for row in table.rows
    ]


def table_from_json(payload: list[dict]) -> CrosswalkTable:
    rows = []
    for rec in payload:
        rows.append(
            CrosswalkRow(
                standard_id=str(rec["standard_id"]),
                result=StepwiseResult(
                    target_ref=int(rec["ref"]),
                    steps=tuple(int(s) for s in rec["steps"]),
                    r2=tuple(float(v) for v in rec["r2"]),
                    increments=tuple(float(v) for v in rec["increments"]),
                    collinear_steps=tuple(int(s) for s in rec.get("collinear_steps", [])),
                ),
            )
        )
    return CrosswalkTable(rows=tuple(sorted(rows, key=lambda r: r.ref)))


def aggregate_to_json(agg: DomainAggregate) -> dict:
    return {
        "side": agg.side.value,
        "total_weight": agg.total_weight,
        "domains": [
            {"id": did, "name": name, "weight_sum": w, "percent": p}
            for did, name, w, p in agg.per_domain
        ],
    }


def occurrences_to_json(counts: OccurrenceCount) -> dict:
    return {
        "total_slots": counts.total_slots,
        "counts": [{"spec_ref": r, "count": c} for r, c in counts.per_spec],
    }


# ---------------------------------------------------------------------------
# Report emission

def _markdown_table(header: list[str], body: list[list[str]]) -> list[str]:
    lines = ["| " + " | ".join(header) + " |"]
    lines.append("|" + "|".join([" --- "] * len(header)) + "|")
    for row in body:
        lines.append("| " + " | ".join(row) + " |")
    return lines


def _render_markdown(table, aggregates, counts) -> str:
    lines: list[str] = ["# Crosswalk report", "", "## Selection and stepwise results", ""]
    body = []
    for row in table.rows:
        res = row.result
        steps = [str(s) for s in res.steps] + [""] * (3 - len(res.steps))
        r2 = [f"{v:.2f}" for v in res.r2] + [""] * (3 - len(res.r2))
        body.append([str(res.target_ref), *steps, *r2, f"{res.step13_increase:.2f}"])
    lines += _markdown_table(
        ["Ref", "Import 1", "Import 2", "Import 3", "Step 1", "Step 2", "Step 3", "Increase"],
        body,
    )
    for agg in aggregates:
        lines += ["", f"## Percent of summed R² by domain ({agg.side.value} side)", ""]
        lines += _markdown_table(
            ["Domain", "Weight", "Percent"],
            [
                [name, f"{w:.2f}", f"{round_half_up(p)}%"]
                for _, name, w, p in agg.per_domain
            ],
        )
    if counts is not None:
        lines += ["", "## Specification occurrence counts", ""]
        occupied = [(r, c) for r, c in counts.per_spec if c > 0]
        lines += _markdown_table(
            ["Spec ref", "Count"], [[str(r), str(c)] for r, c in occupied]
        )
        lines += ["", f"Total slots: {counts.total_slots}"]
    return "\n".join(lines) + "\n"


def emit_report(
    table: CrosswalkTable,
    aggregates: list[DomainAggregate],
    counts: OccurrenceCount | None,
    format: str,
    path: str | Path,
) -> Path:
    """Write the crosswalk report; output bytes are stable for fixed inputs.

    ``csv`` writes the per-standard table alone; ``markdown`` adds the
    aggregate and occurrence sections; ``json`` is the machine-readable
    bundle the review UI consumes.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if format == "csv":
        save_table_csv(table, path)
    elif format == "markdown":
        path.write_text(_render_markdown(table, aggregates, counts), encoding="utf-8")
    elif format == "json":
        payload = {
            "table": table_to_json(table),
            "aggregates": {agg.side.value: aggregate_to_json(agg) for agg in aggregates},
            "occurrences": occurrences_to_json(counts) if counts is not None else None,
        }
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    else:
        raise ReportError(f"unknown report format {format!r} (csv, markdown, json)")
    return path
