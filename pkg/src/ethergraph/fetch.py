"""HTTP collection of transaction dumps and Flashbots block manifests.

The transaction client speaks an explorer-style paged protocol:
``GET {base_url}?module=account&action=txlist&startblock=A&endblock=B&page=P
&offset=N&sort=asc&apikey=K`` returning ``{"status", "message", "result"}``
with a list of record objects. The Flashbots client pages
``GET {flashbots_base_url}?from=A&to=B&limit=N`` returning ``{"blocks": [...]}``
with ascending block numbers.

Both clients persist a checkpoint after every completed page so an
interrupted run can resume without gaps or duplicates: transactions are only
yielded once their block can no longer continue onto a later page.
"""

from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Callable, Iterator

import httpx

from .model import Transaction
from .records import flashbots_pairs_from_mapping, transaction_from_mapping

logger = logging.getLogger(__name__)

API_KEY_ENV = "ETHERGRAPH_API_KEY"


class FetchError(Exception):
    """Base class for collection failures."""


class AuthenticationError(FetchError):
    """The endpoint rejected the API key; retrying cannot help."""


class FetchInterrupted(FetchError):
    """Transport kept failing after retries; carries the resume checkpoint."""

    def __init__(self, message: str, checkpoint: "Checkpoint | None" = None):
        super().__init__(message)
        self.checkpoint = checkpoint


@dataclass(slots=True)
class Checkpoint:
    """Resume marker: every block up to this one has been fully emitted."""

    last_completed_block: int
    records_written: int
    source_descriptor: str

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(asdict(self)) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Checkpoint":
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            last_completed_block=int(obj["last_completed_block"]),
            records_written=int(obj["records_written"]),
            source_descriptor=str(obj.get("source_descriptor", "")),
        )


@dataclass(slots=True)
class EndpointConfig:
    """Connection settings for the collection endpoints.

    Loaded from a plain ``key = value`` config file; the API key can be
    overridden through the environment so secrets stay out of files.
    """

    base_url: str = ""
    api_key: str = ""
    flashbots_base_url: str = ""
    page_size: int = 1000
    rate_limit: float = 5.0  # requests per second
    max_retries: int = 5
    backoff_base: float = 0.5
    timeout: float = 30.0

    @classmethod
    def from_file(cls, path: str | Path, env: dict | None = None) -> "EndpointConfig":
        env = env if env is not None else os.environ
        values: dict[str, str] = {}
        for line_number, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            if "=" not in text:
                raise ValueError(f"{path}:{line_number}: expected key=value, got {text!r}")
            key, _, value = text.partition("=")
            values[key.strip()] = value.strip()
        config = cls(
            base_url=values.get("base_url", ""),
            api_key=values.get("api_key", ""),
            flashbots_base_url=values.get("flashbots_base_url", ""),
            page_size=int(values.get("page_size", 1000)),
            rate_limit=float(values.get("rate_limit", 5.0)),
            max_retries=int(values.get("max_retries", 5)),
            backoff_base=float(values.get("backoff_base", 0.5)),
            timeout=float(values.get("timeout", 30.0)),
        )
        if env.get(API_KEY_ENV):
            config.api_key = env[API_KEY_ENV]
        return config


class RateLimiter:
    """Spaces requests at least ``1/rate`` seconds apart."""

    def __init__(
        self,
        rate: float,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.min_interval = 1.0 / rate if rate > 0 else 0.0
        self._clock = clock
        self._sleep = sleep
        self._last: float | None = None

    def wait(self) -> None:
        if self.min_interval <= 0:
            return
        now = self._clock()
        if self._last is not None:
            remaining = self._last + self.min_interval - now
            if remaining > 0:
                self._sleep(remaining)
                now = self._clock()
        self._last = now


def _classify_status_zero(payload: dict) -> str:
    """Explorer APIs flag errors via status=0; decide retry vs auth vs empty."""
    message = str(payload.get("message", "")).lower()
    result = payload.get("result")
    text = (str(result) if not isinstance(result, list) else "").lower()
    if "invalid api key" in text or "invalid api key" in message:
        return "auth"
    if "rate limit" in text or "rate limit" in message:
        return "retry"
    if isinstance(result, list):
        return "ok"  # e.g. "No transactions found" with an empty list
    if "no transactions found" in message:
        return "empty"
    return "retry"


class _PagedClient:
    """Shared retry / rate-limit / checkpoint plumbing for both endpoints."""

    def __init__(
        self,
        config: EndpointConfig,
        client: httpx.Client | None = None,
        sleep: Callable[[float], None] = time.sleep,
        clock: Callable[[], float] = time.monotonic,
    ):
        self.config = config
        self._own_client = client is None
        self.client = client if client is not None else httpx.Client(timeout=config.timeout)
        self.sleep = sleep
        self.limiter = RateLimiter(config.rate_limit, clock, sleep)

    def close(self) -> None:
        if self._own_client:
            self.client.close()

    def get_json(self, url: str, params: dict) -> dict:
        last_error: str = "unknown error"
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                self.sleep(self.config.backoff_base * 2 ** (attempt - 1))
            self.limiter.wait()
            try:
                response = self.client.get(url, params=params, timeout=self.config.timeout)
            except httpx.HTTPError as exc:
                last_error = f"transport error: {exc}"
                logger.warning("request failed (attempt %d): %s", attempt + 1, exc)
                continue
            if response.status_code in (401, 403):
                raise AuthenticationError(f"endpoint rejected credentials: HTTP {response.status_code}")
            if response.status_code == 429 or response.status_code >= 500:
                last_error = f"HTTP {response.status_code}"
                logger.warning("retryable response (attempt %d): %s", attempt + 1, last_error)
                continue
            if response.status_code != 200:
                raise FetchError(f"unexpected response: HTTP {response.status_code}")
            try:
                return response.json()
            except ValueError:
                last_error = "invalid JSON body"
                continue
        raise FetchInterrupted(f"giving up after {self.config.max_retries + 1} attempts: {last_error}")


def fetch_transactions(
    config: EndpointConfig,
    start_block: int,
    end_block: int,
    *,
    checkpoint_path: str | Path | None = None,
    resume: bool = False,
    client: httpx.Client | None = None,
    sleep: Callable[[float], None] = time.sleep,
    clock: Callable[[], float] = time.monotonic,
) -> Iterator[Transaction]:
    """Stream all transactions in the closed block interval, in block order.

    A checkpoint is written after each completed page; a transaction is only
    yielded once its block cannot continue onto the next page, so resuming
    from ``last_completed_block + 1`` neither duplicates nor skips records.
    An empty interval yields nothing and writes no checkpoint.
    """
    if not config.base_url:
        raise ValueError("endpoint config has no base_url")
    descriptor = f"txlist {config.base_url} blocks {start_block}-{end_block}"
    if start_block > end_block:
        return

    records_written = 0
    if resume and checkpoint_path and Path(checkpoint_path).exists():
        checkpoint = Checkpoint.load(checkpoint_path)
        if not (start_block - 1 <= checkpoint.last_completed_block <= end_block):
            raise ValueError(
                f"checkpoint block {checkpoint.last_completed_block} is outside "
                f"the requested range {start_block}-{end_block}"
            )
        start_block = checkpoint.last_completed_block + 1
        records_written = checkpoint.records_written
        logger.info("resuming fetch from block %d", start_block)
        if start_block > end_block:
            return

    paged = _PagedClient(config, client, sleep, clock)
    checkpoint = Checkpoint(start_block - 1, records_written, descriptor)

    def save_checkpoint() -> None:
        if checkpoint_path:
            checkpoint.save(checkpoint_path)

    try:
        page = 1
        pending: list[Transaction] = []  # txs of the block that may continue next page
        while True:
            params = {
                "module": "account",
                "action": "txlist",
                "startblock": start_block,
                "endblock": end_block,
                "page": page,
                "offset": config.page_size,
                "sort": "asc",
                "apikey": config.api_key,
            }
            try:
                payload = paged.get_json(config.base_url, params)
            except FetchInterrupted as exc:
                raise FetchInterrupted(str(exc), checkpoint) from None

            status = str(payload.get("status", "1"))
            result = payload.get("result", [])
            if status == "0":
                kind = _classify_status_zero(payload)
                if kind == "auth":
                    raise AuthenticationError(str(payload.get("result") or payload.get("message")))
                if kind == "empty":
                    result = []
                elif kind == "retry":
                    raise FetchInterrupted(
                        f"endpoint error: {payload.get('message')!r}", checkpoint
                    )
            if not isinstance(result, list):
                raise FetchError(f"malformed result payload: {type(result).__name__}")

            txs = pending + [transaction_from_mapping(obj) for obj in result]
            last_page = len(result) < config.page_size
            if last_page:
                ready, pending = txs, []
                completed = end_block
            else:
                split = txs[-1].block_number  # may continue onto the next page
                ready = [t for t in txs if t.block_number < split]
                pending = [t for t in txs if t.block_number == split]
                completed = max(checkpoint.last_completed_block, split - 1)

            yield from ready
            checkpoint.records_written += len(ready)
            checkpoint.last_completed_block = completed
            save_checkpoint()
            if last_page:
                return
            page += 1
    finally:
        paged.close()


def fetch_flashbots_blocks(
    config: EndpointConfig,
    start_block: int,
    end_block: int,
    *,
    checkpoint_path: str | Path | None = None,
    resume: bool = False,
    client: httpx.Client | None = None,
    sleep: Callable[[float], None] = time.sleep,
    clock: Callable[[], float] = time.monotonic,
) -> Iterator[tuple[int, str]]:
    """Stream (block_number, tx_hash) pairs for bundled transactions.

    Pages ascending through the closed block interval; blocks are atomic in
    the response, so each page advances the checkpoint to its last block.
    """
    if not config.flashbots_base_url:
        raise ValueError("endpoint config has no flashbots_base_url")
    descriptor = f"flashbots {config.flashbots_base_url} blocks {start_block}-{end_block}"
    if start_block > end_block:
        return

    if resume and checkpoint_path and Path(checkpoint_path).exists():
        checkpoint = Checkpoint.load(checkpoint_path)
        start_block = checkpoint.last_completed_block + 1
        records_written = checkpoint.records_written
        if start_block > end_block:
            return
    else:
        records_written = 0

    paged = _PagedClient(config, client, sleep, clock)
    checkpoint = Checkpoint(start_block - 1, records_written, descriptor)
    try:
        cursor = start_block
        while cursor <= end_block:
            params = {"from": cursor, "to": end_block, "limit": 100}
            try:
                payload = paged.get_json(config.flashbots_base_url, params)
            except FetchInterrupted as exc:
                raise FetchInterrupted(str(exc), checkpoint) from None
            blocks = payload.get("blocks", [])
            if not isinstance(blocks, list):
                raise FetchError("malformed blocks payload")
            if not blocks:
                checkpoint.last_completed_block = end_block
                if checkpoint_path:
                    checkpoint.save(checkpoint_path)
                return
            highest = cursor - 1
            for obj in blocks:
                for pair in flashbots_pairs_from_mapping(obj):
                    checkpoint.records_written += 1
                    yield pair
                highest = max(highest, int(obj["block_number"]))
            checkpoint.last_completed_block = highest
            if checkpoint_path:
                checkpoint.save(checkpoint_path)
            if len(blocks) < 100:
                checkpoint.last_completed_block = end_block
                if checkpoint_path:
                    checkpoint.save(checkpoint_path)
                return
            cursor = highest + 1
    finally:
        paged.close()
