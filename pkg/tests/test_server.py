import pytest
from fastapi.testclient import TestClient

from crossmap.server import AdjudicationLog, AdjudicationRecord, create_app

# the shared study-artifacts fixture takes ~1 min to build the first time
pytestmark = pytest.mark.slow


@pytest.fixture
def client(study_artifacts):
    log = study_artifacts / "adjudications.jsonl"
    if log.exists():
        log.unlink()
    app = create_app(study_artifacts)
    with TestClient(app) as c:
        yield c
    if log.exists():
        log.unlink()


def test_standards_listing(client):
    standards = client.get("/api/standards").json()
    assert len(standards) == 34
    assert standards[0]["id"] == "4.OA.A.1"
    assert standards[12]["ref"] == 13
    assert standards[12]["domain_name"].endswith("Fractions")


def test_candidates_sorted_with_badges(client):
    payload = client.get("/api/standards/13/candidates").json()
    candidates = payload["candidates"]
    assert len(candidates) == 49
    assert candidates[0]["ref"] == 7  # highest similarity on the archived run
    sims = [c["similarity"] for c in candidates]
    assert sims == sorted(sims, reverse=True)
    badged = {c["ref"]: c["step"] for c in candidates if c["step"] is not None}
    assert badged[7] == 1  # step-1 selection matches the top candidate
    assert len(badged) == 3
    assert client.get("/api/standards/99/candidates").status_code == 404


def test_adjudication_write_read_and_latest_wins(client):
    record = {
        "standard_ref": 13,
        "spec_ref": 7,
        "decision": "accept",
        "note": "clear match",
        "reviewer": "sme-1",
    }
    resp = client.post("/api/adjudications", json=record)
    assert resp.status_code == 201
    assert resp.json()["created_at"]

    listing = client.get("/api/adjudications").json()
    assert len(listing["latest"]) == 1
    assert listing["latest"][0]["decision"] == "accept"

    record["decision"] = "flag"
    client.post("/api/adjudications", json=record)
    listing = client.get("/api/adjudications").json()
    assert len(listing["latest"]) == 1  # same (standard, spec, reviewer) key
    assert listing["latest"][0]["decision"] == "flag"
    assert listing["history_count"] == 2

    other = dict(record, reviewer="sme-2", decision="reject")
    client.post("/api/adjudications", json=other)
    assert len(client.get("/api/adjudications").json()["latest"]) == 2


@pytest.mark.parametrize(
    "patch",
    [
        {"standard_ref": 99},
        {"spec_ref": 50},
        {"decision": "maybe"},
        {"reviewer": ""},
    ],
)
def test_adjudication_validation_422(client, patch):
    record = {
        "standard_ref": 13,
        "spec_ref": 7,
        "decision": "accept",
        "note": "",
        "reviewer": "sme-1",
    }
    record.update(patch)
    assert client.post("/api/adjudications", json=record).status_code == 422
    assert client.get("/api/adjudications").json()["history_count"] == 0


def test_decisions_persist_across_restart(client, study_artifacts):
    record = {
        "standard_ref": 2,
        "spec_ref": 15,
        "decision": "accept",
        "note": "",
        "reviewer": "sme-1",
    }
    client.post("/api/adjudications", json=record)
    fresh = TestClient(create_app(study_artifacts))
    listing = fresh.get("/api/adjudications").json()
    assert listing["latest"][0]["standard_ref"] == 2


def test_export_merges_decisions(client):
    client.post(
        "/api/adjudications",
        json={"standard_ref": 13, "spec_ref": 7, "decision": "accept", "note": "", "reviewer": "r"},
    )
    export = client.get("/api/export").json()
    assert len(export["rows"]) == 34
    row13 = [r for r in export["rows"] if r["ref"] == 13][0]
    assert row13["decisions"][0]["spec_ref"] == 7
    assert export["adjudications"][0]["decision"] == "accept"


def test_report_endpoint_serves_table_and_manifest(client):
    payload = client.get("/api/report").json()
    assert payload["manifest"]["master_seed"] == 20260801
    assert len(payload["table"]) == 34
    assert payload["report"]["aggregates"]["standard"]["domains"][0]["name"].startswith("Operations")


def test_log_replay_and_ordering(tmp_path):
    log = AdjudicationLog(tmp_path / "adj.jsonl")
    for i, decision in enumerate(["accept", "reject", "accept"]):
        log.append(
            AdjudicationRecord(
                standard_ref=1,
                spec_ref=1,
                decision=decision,
                note="",
                reviewer="r",
                created_at=f"2026-08-10T0{i}:00:00+00:00",
            )
        )
    assert len(log.all()) == 3
    assert log.latest()[0].decision == "accept"
    replayed = AdjudicationLog(tmp_path / "adj.jsonl")
    assert replayed.all() == log.all()
