"""Shared fixtures: bundled corpora, archived matrices, and a local
OpenAI-compatible embeddings service so every test runs offline."""

from __future__ import annotations

import hashlib
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np
import pytest

from crossmap.corpus import Side, load_corpus
from crossmap.embeddings import load_matrix
from crossmap.report import load_table_csv

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
DATA = ROOT / "data"


@pytest.fixture(scope="session")
def ccss_corpus():
    return load_corpus(DATA / "ccss_g4_math.json", Side.STANDARD)


@pytest.fixture(scope="session")
def naep_corpus():
    return load_corpus(DATA / "naep_g4_math.json", Side.SPECIFICATION)


@pytest.fixture(scope="session")
def archived_std(ccss_corpus):
    return load_matrix(FIXTURES / "archived_run" / "ccss_embeddings.csv", corpus=ccss_corpus)


@pytest.fixture(scope="session")
def archived_spec(naep_corpus):
    return load_matrix(FIXTURES / "archived_run" / "naep_embeddings.csv", corpus=naep_corpus)


@pytest.fixture(scope="session")
def published_table(ccss_corpus):
    return load_table_csv(FIXTURES / "table1_published.csv", corpus=ccss_corpus)


def deterministic_embedding(model: str, dimensions: int, text: str) -> list[float]:
    """Unit vector derived only from (model, dimensions, text)."""
    digest = hashlib.sha256(f"{model}|{dimensions}|{text}".encode("utf-8")).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
    v = rng.standard_normal(dimensions)
    v /= np.linalg.norm(v)
    return [float(x) for x in v]


class MockEmbeddingService:
    """Tiny in-process stand-in for the embeddings endpoint.

    ``fail_queue`` holds HTTP statuses returned (and consumed) before any
    successful response; ``dims_override`` forces wrong-length vectors.
    """

    def __init__(self):
        self.fail_queue: list[int] = []
        self.dims_override: int | None = None
        self.request_count = 0
        service = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):  # noqa: N802
                service.request_count += 1
                if service.fail_queue:
                    status = service.fail_queue.pop(0)
                    self.send_response(status)
                    self.end_headers()
                    self.wfile.write(b"induced failure")
                    return
                length = int(self.headers.get("Content-Length", 0))
                body = json.loads(self.rfile.read(length))
                dims = service.dims_override or int(body["dimensions"])
                data = [
                    {
                        "index": i,
                        "embedding": deterministic_embedding(body["model"], dims, text),
                    }
                    for i, text in enumerate(body["input"])
                ]
                payload = json.dumps({"data": data}).encode("utf-8")
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            def log_message(self, *args):
                pass

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    @property
    def url(self) -> str:
        host, port = self._server.server_address
        return f"http://{host}:{port}"

    def shutdown(self):
        self._server.shutdown()
        self._server.server_close()


@pytest.fixture
def embedding_service():
    service = MockEmbeddingService()
    yield service
    service.shutdown()


STUDY_FOREST_TOML = """\
[forest]
seed = 20260801
n_trees = 60
mtry = 6
n_replications = 2
min_leaf = 100
top_k = 3
"""


def study_config_toml(output_dir: Path) -> str:
    """Offline pipeline config over the archived matrices (reduced forest size
    keeps the run around a minute; selection quality margins are wide)."""
    return (
        "[corpus]\n"
        f'standards = "{DATA / "ccss_g4_math.json"}"\n'
        f'specifications = "{DATA / "naep_g4_math.json"}"\n'
        'standards_scheme = "bundled"\n\n'
        "[embeddings]\n"
        f'standards_matrix = "{FIXTURES / "archived_run" / "ccss_embeddings.csv"}"\n'
        f'specifications_matrix = "{FIXTURES / "archived_run" / "naep_embeddings.csv"}"\n\n'
        + STUDY_FOREST_TOML
        + "\n[output]\n"
        f'dir = "{output_dir}"\n'
        'formats = ["csv", "markdown", "json"]\n'
    )


@pytest.fixture(scope="session")
def study_artifacts(tmp_path_factory):
    """Full pipeline run over the archived study matrices (shared, read-only
    apart from the adjudication log, which tests must clean up)."""
    from crossmap.pipeline import run_pipeline

    base = tmp_path_factory.mktemp("study_run")
    config = base / "config.toml"
    out = base / "artifacts"
    config.write_text(study_config_toml(out), encoding="utf-8")
    return run_pipeline(config)
