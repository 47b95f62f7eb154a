"""HTTP service over a pipeline artifacts directory for the review UI.

Read-only except for the adjudication store, which is an append-only
JSON-lines log replayed on startup; the latest record per
(standard_ref, spec_ref, reviewer) wins.  Every write is flushed and synced
before the request returns.
"""

from __future__ import annotations

import csv
import enum
import json
import os
import threading
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from crossmap.corpus import Corpus, Side, load_corpus
from crossmap.report import load_table_csv, table_to_json


class Decision(str, enum.Enum):
    ACCEPT = "accept"
    REJECT = "reject"
    FLAG = "flag"


@dataclass(frozen=True)
class AdjudicationRecord:
    standard_ref: int
    spec_ref: int
    decision: str
    note: str
    reviewer: str
    created_at: str


class AdjudicationLog:
    """Durable append-only store of reviewer decisions."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._records: list[AdjudicationRecord] = []
        if self.path.exists():
            with self.path.open("r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        self._records.append(AdjudicationRecord(**json.loads(line)))

    def append(self, record: AdjudicationRecord) -> None:
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(asdict(record), sort_keys=True) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self._records.append(record)

    def all(self) -> list[AdjudicationRecord]:
        with self._lock:
            return list(self._records)

    def latest(self) -> list[AdjudicationRecord]:
        """Last decision per (standard_ref, spec_ref, reviewer), stable order."""
        with self._lock:
            latest: dict[tuple[int, int, str], AdjudicationRecord] = {}
            for rec in self._records:
                latest[(rec.standard_ref, rec.spec_ref, rec.reviewer)] = rec
            return sorted(
                latest.values(), key=lambda r: (r.standard_ref, r.spec_ref, r.reviewer)
            )


class AdjudicationIn(BaseModel):
    standard_ref: int
    spec_ref: int
    decision: Decision
    note: str = ""
    reviewer: str = Field(min_length=1)


def _load_similarity_csv(path: Path) -> tuple[list[str], list[str], list[list[float]]]:
    with path.open("r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    col_ids = rows[0][1:]
    row_ids = [r[0] for r in rows[1:]]
    values = [[float(x) for x in r[1:]] for r in rows[1:]]
    return row_ids, col_ids, values


def create_app(artifacts_dir: str | Path, ui_dir: str | Path | None = None) -> FastAPI:
    artifacts = Path(artifacts_dir)
    for required in ("corpus_standards.json", "corpus_specifications.json",
                     "similarity_cosine.csv", "crosswalk_table.csv", "manifest.json"):
        if not (artifacts / required).exists():
            raise FileNotFoundError(f"artifacts directory is missing {required}")

    standards = load_corpus(artifacts / "corpus_standards.json", Side.STANDARD)
    specifications = load_corpus(artifacts / "corpus_specifications.json", Side.SPECIFICATION)
    table = load_table_csv(artifacts / "crosswalk_table.csv", corpus=standards)
    manifest = json.loads((artifacts / "manifest.json").read_text(encoding="utf-8"))
    _, _, sim_values = _load_similarity_csv(artifacts / "similarity_cosine.csv")
    report_json = None
    if (artifacts / "crosswalk_table.json").exists():
        report_json = json.loads((artifacts / "crosswalk_table.json").read_text(encoding="utf-8"))
    log = AdjudicationLog(artifacts / "adjudications.jsonl")

    app = FastAPI(title="crossmap review API")

    def standard_payload(corpus: Corpus, ref: int) -> dict:
        s = corpus.statement(ref)
        return {
            "ref": s.ref_num,
            "id": s.id,
            "domain_id": s.domain_id,
            "domain_name": corpus.scheme.name_of(s.domain_id),
            "text": s.text,
        }

    @app.get("/api/standards")
    def list_standards():
        return [standard_payload(standards, ref) for ref in standards.ref_nums]

    @app.get("/api/standards/{ref}/candidates")
    def candidates(ref: int):
        if not 1 <= ref <= len(standards):
            raise HTTPException(status_code=404, detail=f"unknown standard ref {ref}")
        row = table.row(ref)
        badge = {
            spec_ref: {"step": k + 1, "increment": row.result.increments[k], "r2": row.result.r2[k]}
            for k, spec_ref in enumerate(row.result.steps)
        }
        sims = sim_values[ref - 1]
        order = sorted(range(len(sims)), key=lambda j: (-sims[j], j))
        out = []
        for rank, j in enumerate(order, start=1):
            spec_ref = specifications.ref_nums[j]
            item = standard_payload(specifications, spec_ref)
            item.update({"similarity": sims[j], "rank": rank})
            item.update(badge.get(spec_ref, {"step": None, "increment": None, "r2": None}))
            out.append(item)
        return {"standard": standard_payload(standards, ref), "candidates": out}

    @app.get("/api/report")
    def report():
        return {
            "manifest": manifest,
            "report": report_json,
            "table": table_to_json(table),
        }

    @app.get("/api/adjudications")
    def get_adjudications():
        return {
            "latest": [asdict(r) for r in log.latest()],
            "history_count": len(log.all()),
        }

    @app.post("/api/adjudications", status_code=201)
    def post_adjudication(payload: AdjudicationIn):
        if not 1 <= payload.standard_ref <= len(standards):
            raise HTTPException(status_code=422, detail=f"unknown standard ref {payload.standard_ref}")
        if not 1 <= payload.spec_ref <= len(specifications):
            raise HTTPException(status_code=422, detail=f"unknown spec ref {payload.spec_ref}")
        record = AdjudicationRecord(
            standard_ref=payload.standard_ref,
            spec_ref=payload.spec_ref,
            decision=payload.decision.value,
            note=payload.note,
            reviewer=payload.reviewer,
            created_at=datetime.now(timezone.utc).isoformat(),
        )
        log.append(record)
        return asdict(record)

    @app.get("/api/export")
    def export():
        decisions = log.latest()
        by_standard: dict[int, list[dict]] = {}
        for rec in decisions:
            by_standard.setdefault(rec.standard_ref, []).append(asdict(rec))
        rows = []
        for row in table.rows:
            rows.append(
                {
                    "standard_id": row.standard_id,
                    "ref": row.ref,
                    "steps": list(row.result.steps),
                    "r2": list(row.result.r2),
                    "increments": list(row.result.increments),
                    "decisions": by_standard.get(row.ref, []),
                }
            )
        return {
            "manifest_hash": manifest.get("input_hashes", {}),
            "rows": rows,
            "adjudications": [asdict(r) for r in decisions],
        }

    ui_dist = (
        Path(ui_dir)
        if ui_dir is not None
        else Path(__file__).resolve().parent.parent.parent / "frontend" / "dist"
    )
    if ui_dist.is_dir():
        app.mount("/ui", StaticFiles(directory=ui_dist, html=True), name="ui")

    return app
