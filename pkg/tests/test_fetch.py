import json

import httpx
import pytest

from ethergraph.fetch import (
    AuthenticationError,
    Checkpoint,
    EndpointConfig,
    FetchInterrupted,
    RateLimiter,
    fetch_flashbots_blocks,
    fetch_transactions,
)
from ethergraph.records import transaction_to_mapping

from synth import make_corpus

API_KEY = "test-key"


def _config(page_size=50, **kwargs) -> EndpointConfig:
    defaults = dict(
        base_url="http://api.test/api",
        flashbots_base_url="http://fb.test/v1/blocks",
        api_key=API_KEY,
        page_size=page_size,
        rate_limit=0,  # no pacing inside tests unless asked
        max_retries=3,
        backoff_base=0.01,
    )
    defaults.update(kwargs)
    return EndpointConfig(**defaults)


class MockServer:
    """txlist + flashbots endpoints over a transaction corpus."""

    def __init__(self, corpus, fail_requests: set[int] | None = None, fail_from: int | None = None):
        self.records = sorted(
            (transaction_to_mapping(tx) for tx in corpus.unique_transactions()),
            key=lambda r: r["blockNumber"],
        )
        by_block: dict[int, list[str]] = {}
        for block, tx_hash in corpus.manifest_pairs:
            by_block.setdefault(block, []).append(tx_hash)
        self.fb_blocks = [
            {"block_number": b, "transactions": [{"transaction_hash": h} for h in hashes]}
            for b, hashes in sorted(by_block.items())
        ]
        self.fail_requests = fail_requests or set()
        self.fail_from = fail_from
        self.requests = 0

    def transport(self) -> httpx.MockTransport:
        return httpx.MockTransport(self.handle)

    def handle(self, request: httpx.Request) -> httpx.Response:
        self.requests += 1
        if self.requests in self.fail_requests:
            return httpx.Response(500, text="boom")
        if self.fail_from is not None and self.requests >= self.fail_from:
            return httpx.Response(500, text="down")
        params = dict(request.url.params)
        if request.url.host == "fb.test":
            start, end = int(params["from"]), int(params["to"])
            limit = int(params["limit"])
            window = [b for b in self.fb_blocks if start <= b["block_number"] <= end][:limit]
            return httpx.Response(200, json={"blocks": window})
        if params.get("apikey") != API_KEY:
            return httpx.Response(
                200, json={"status": "0", "message": "NOTOK", "result": "Invalid API Key"}
            )
        start, end = int(params["startblock"]), int(params["endblock"])
        page, offset = int(params["page"]), int(params["offset"])
        rows = [r for r in self.records if start <= r["blockNumber"] <= end]
        window = rows[(page - 1) * offset : page * offset]
        if not window:
            return httpx.Response(
                200, json={"status": "0", "message": "No transactions found", "result": []}
            )
        return httpx.Response(200, json={"status": "1", "message": "OK", "result": window})


@pytest.fixture
def corpus():
    return make_corpus(seed=71, n_tx=400, n_accounts=30, days=5, flashbots_rate=0.2)


def _client(server: MockServer) -> httpx.Client:
    return httpx.Client(transport=server.transport())


def _block_span(corpus):
    blocks = [t.block_number for t in corpus.transactions]
    return min(blocks), max(blocks)


class TestFetchTransactions:
    def test_one_shot_fetch_streams_all_blocks_in_order(self, corpus, tmp_path):
        server = MockServer(corpus)
        lo, hi = _block_span(corpus)
        ckpt = tmp_path / "ckpt.json"
        txs = list(
            fetch_transactions(
                _config(), lo, hi, checkpoint_path=ckpt, client=_client(server)
            )
        )
        assert {t.hash for t in txs} == {t.hash for t in corpus.unique_transactions()}
        blocks = [t.block_number for t in txs]
        assert blocks == sorted(blocks)
        saved = Checkpoint.load(ckpt)
        assert saved.last_completed_block == hi
        assert saved.records_written == len(txs)

    def test_single_block_range(self, corpus, tmp_path):
        server = MockServer(corpus)
        block = corpus.transactions[0].block_number
        expected = {t.hash for t in corpus.unique_transactions() if t.block_number == block}
        ckpt = tmp_path / "ckpt.json"
        txs = list(
            fetch_transactions(
                _config(), block, block, checkpoint_path=ckpt, client=_client(server)
            )
        )
        assert {t.hash for t in txs} == expected
        assert Checkpoint.load(ckpt).last_completed_block == block

    def test_empty_range_writes_no_checkpoint(self, corpus, tmp_path):
        server = MockServer(corpus)
        ckpt = tmp_path / "ckpt.json"
        assert list(
            fetch_transactions(_config(), 10, 5, checkpoint_path=ckpt, client=_client(server))
        ) == []
        assert not ckpt.exists()

    def test_interrupt_then_resume_equals_one_shot(self, corpus, tmp_path):
        lo, hi = _block_span(corpus)
        ckpt = tmp_path / "ckpt.json"

        broken = MockServer(corpus, fail_from=4)  # a few pages, then permanent failure
        first_run: list = []
        with pytest.raises(FetchInterrupted) as excinfo:
            for tx in fetch_transactions(
                _config(page_size=60),
                lo,
                hi,
                checkpoint_path=ckpt,
                client=_client(broken),
                sleep=lambda s: None,
            ):
                first_run.append(tx)
        assert excinfo.value.checkpoint is not None
        assert ckpt.exists()
        assert len(first_run) > 0

        healed = MockServer(corpus)
        second_run = list(
            fetch_transactions(
                _config(page_size=60),
                lo,
                hi,
                checkpoint_path=ckpt,
                resume=True,
                client=_client(healed),
            )
        )
        combined = [t.hash for t in first_run + second_run]
        assert len(combined) == len(set(combined))  # no duplicates
        one_shot = {t.hash for t in corpus.unique_transactions()}
        assert set(combined) == one_shot

    def test_resume_from_out_of_range_checkpoint_rejected(self, corpus, tmp_path):
        ckpt = tmp_path / "ckpt.json"
        Checkpoint(99, 0, "other range").save(ckpt)
        lo, hi = _block_span(corpus)
        with pytest.raises(ValueError, match="outside"):
            list(
                fetch_transactions(
                    _config(), lo, hi, checkpoint_path=ckpt, resume=True,
                    client=_client(MockServer(corpus)),
                )
            )

    def test_auth_failure_is_immediate(self, corpus):
        server = MockServer(corpus)
        lo, hi = _block_span(corpus)
        with pytest.raises(AuthenticationError):
            list(
                fetch_transactions(
                    _config(api_key="wrong"), lo, hi, client=_client(server)
                )
            )
        assert server.requests == 1  # no retries on auth errors

    def test_transient_errors_retried_with_backoff(self, corpus):
        server = MockServer(corpus, fail_requests={1, 2})
        lo, hi = _block_span(corpus)
        sleeps: list[float] = []
        txs = list(
            fetch_transactions(
                _config(backoff_base=0.5),
                lo,
                hi,
                client=_client(server),
                sleep=sleeps.append,
            )
        )
        assert {t.hash for t in txs} == {t.hash for t in corpus.unique_transactions()}
        assert sleeps[:2] == [0.5, 1.0]  # exponential backoff

    def test_retry_budget_exhausted_raises_resumable(self, corpus):
        server = MockServer(corpus, fail_from=1)
        lo, hi = _block_span(corpus)
        with pytest.raises(FetchInterrupted):
            list(
                fetch_transactions(
                    _config(max_retries=2), lo, hi, client=_client(server), sleep=lambda s: None
                )
            )
        assert server.requests == 3  # initial try + 2 retries


class TestFetchFlashbots:
    def test_pairs_match_manifest(self, corpus, tmp_path):
        server = MockServer(corpus)
        blocks = [b for b, _ in corpus.manifest_pairs]
        ckpt = tmp_path / "fb.json"
        pairs = list(
            fetch_flashbots_blocks(
                _config(), min(blocks), max(blocks), checkpoint_path=ckpt,
                client=_client(server),
            )
        )
        assert sorted(pairs) == sorted(corpus.manifest_pairs)
        assert Checkpoint.load(ckpt).last_completed_block == max(blocks)

    def test_empty_interval(self, corpus):
        server = MockServer(corpus)
        assert list(fetch_flashbots_blocks(_config(), 50, 10, client=_client(server))) == []


class TestRateLimiter:
    def test_spaces_requests(self):
        clock = {"now": 0.0}
        sleeps: list[float] = []

        def fake_sleep(seconds: float) -> None:
            sleeps.append(seconds)
            clock["now"] += seconds

        limiter = RateLimiter(rate=2.0, clock=lambda: clock["now"], sleep=fake_sleep)
        limiter.wait()
        limiter.wait()
        clock["now"] += 0.2
        limiter.wait()
        assert sleeps == pytest.approx([0.5, 0.3])

    def test_zero_rate_never_sleeps(self):
        sleeps: list[float] = []
        limiter = RateLimiter(rate=0, sleep=sleeps.append)
        limiter.wait()
        limiter.wait()
        assert sleeps == []

    def test_default_rate_is_five_per_second(self):
        assert EndpointConfig().rate_limit == 5.0


class TestEndpointConfig:
    def test_from_file_with_env_override(self, tmp_path, monkeypatch):
        path = tmp_path / "endpoint.conf"
        path.write_text(
            "# collection endpoint\n"
            "base_url = http://api.test/api\n"
            "api_key = from-file\n"
            "page_size = 77\n"
            "rate_limit = 2.5\n",
            encoding="utf-8",
        )
        config = EndpointConfig.from_file(path, env={})
        assert config.base_url == "http://api.test/api"
        assert config.api_key == "from-file"
        assert config.page_size == 77
        assert config.rate_limit == 2.5

        config = EndpointConfig.from_file(path, env={"ETHERGRAPH_API_KEY": "from-env"})
        assert config.api_key == "from-env"

    def test_malformed_line_rejected(self, tmp_path):
        path = tmp_path / "endpoint.conf"
        path.write_text("base_url http://x\n", encoding="utf-8")
        with pytest.raises(ValueError, match="key=value"):
            EndpointConfig.from_file(path)
