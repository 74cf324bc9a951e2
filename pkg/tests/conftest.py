from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from ethergraph.service import create_app

from synth import make_corpus, write_manifest, write_ndjson


@pytest.fixture
def client():
    with TestClient(create_app(), raise_server_exceptions=False) as test_client:
        yield test_client


@pytest.fixture
def small_corpus():
    return make_corpus(
        seed=7,
        n_tx=400,
        n_accounts=40,
        days=21,
        duplicate_count=3,
        unmatched_manifest=2,
    )


@pytest.fixture
def corpus_files(tmp_path, small_corpus):
    txs = tmp_path / "txs.ndjson"
    manifest = tmp_path / "flashbots.ndjson"
    write_ndjson(small_corpus, txs)
    write_manifest(small_corpus, manifest)
    return {"txs": txs, "manifest": manifest, "corpus": small_corpus, "dir": tmp_path}
