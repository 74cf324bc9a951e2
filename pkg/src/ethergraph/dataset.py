"""Dataset assembly: deduplication, filtering, and Flashbots membership flags.

The full transaction collection is the primary view; the Flashbots subset is
represented as per-transaction membership flags over it, never as a separate
copy, so the subset relation holds structurally.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .model import Transaction
from .records import ParseStats, read_flashbots_records, read_transactions

logger = logging.getLogger(__name__)


@dataclass(slots=True)
class FlashbotsManifest:
    """Set of transactions known to have gone through the bundle relay.

    Entries are unique by transaction hash; the block number of the first
    occurrence is kept for diagnostics.
    """

    blocks_by_hash: dict[str, int] = field(default_factory=dict)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, str]]) -> "FlashbotsManifest":
        blocks_by_hash: dict[str, int] = {}
        for block, tx_hash in pairs:
            blocks_by_hash.setdefault(tx_hash, block)
        return cls(blocks_by_hash)

    @classmethod
    def load(cls, path: str | Path, on_error: str = "raise") -> "FlashbotsManifest":
        stats = ParseStats()
        manifest = cls.from_pairs(read_flashbots_records(path, on_error, stats))
        return manifest

    def __contains__(self, tx_hash: str) -> bool:
        return tx_hash in self.blocks_by_hash

    def __len__(self) -> int:
        return len(self.blocks_by_hash)


@dataclass(slots=True)
class IngestStats:
    """Bookkeeping from one dataset assembly run."""

    records_read: int = 0
    kept: int = 0
    duplicates_dropped: int = 0
    out_of_range: int = 0
    failed_dropped: int = 0
    missing_status: int = 0
    skipped_records: int = 0
    flashbots_members: int = 0
    unmatched_manifest: int = 0


@dataclass(slots=True)
class Dataset:
    """Ordered, deduplicated transaction collection with membership flags.

    ``transactions`` is sorted by block number (stable within a block);
    ``flashbots_member[i]`` tells whether ``transactions[i]`` is in the
    Flashbots subset.
    """

    transactions: list[Transaction]
    flashbots_member: list[bool]
    block_range: tuple[int, int] | None
    source_descriptor: str
    stats: IngestStats = field(default_factory=IngestStats)

    def __len__(self) -> int:
        return len(self.transactions)

    @property
    def member_count(self) -> int:
        return self.stats.flashbots_members

    def iter_flagged(self) -> Iterator[tuple[Transaction, bool]]:
        return zip(self.transactions, self.flashbots_member)

    def view(self, name: str) -> Iterator[Transaction]:
        """Iterate the full collection or only the Flashbots subset."""
        if name == "full":
            return iter(self.transactions)
        if name == "flashbots":
            return (tx for tx, member in self.iter_flagged() if member)
        raise ValueError(f"unknown view {name!r}; expected 'full' or 'flashbots'")


def dedupe_filter_stream(
    txs: Iterable[Transaction],
    *,
    manifest: FlashbotsManifest | None = None,
    min_block: int | None = None,
    max_block: int | None = None,
    require_success: bool = False,
    stats: IngestStats | None = None,
) -> Iterator[tuple[Transaction, bool]]:
    """Deduplicate and filter a transaction stream, yielding membership flags.

    First occurrence of a duplicated hash wins. Failed transactions are
    dropped only when ``require_success`` is set and the record actually
    carries a status; records without one are kept and counted so the
    caller can surface that success filtering was unavailable.

    Memory holds one fixed-size key per distinct hash (plus nothing else),
    so the stream can be consumed without materializing the collection.
    """
    stats = stats if stats is not None else IngestStats()
    seen: set[int] = set()
    for tx in txs:
        stats.records_read += 1
        block = tx.block_number
        if (min_block is not None and block < min_block) or (
            max_block is not None and block > max_block
        ):
            stats.out_of_range += 1
            continue
        if require_success:
            if tx.success is False:
                stats.failed_dropped += 1
                continue
            if tx.success is None:
                stats.missing_status += 1
        key = int(tx.hash, 16)
        if key in seen:
            stats.duplicates_dropped += 1
            continue
        seen.add(key)
        member = manifest is not None and tx.hash in manifest
        if member:
            stats.flashbots_members += 1
        stats.kept += 1
        yield tx, member


def _is_pathlike(obj: object) -> bool:
    return isinstance(obj, (str, Path))


def load_dataset(
    tx_sources: Iterable[str | Path] | Iterable[Transaction],
    manifest: FlashbotsManifest | None = None,
    *,
    min_block: int | None = None,
    max_block: int | None = None,
    require_success: bool = False,
    on_error: str = "raise",
    descriptor: str | None = None,
) -> Dataset:
    """Assemble a Dataset from dump files or an already-parsed stream.

    Transactions are deduplicated by hash (first occurrence wins), filtered
    to the block range, sorted by block number (stable within a block), and
    flagged against the manifest. Manifest entries whose hash never shows up
    are counted as unmatched, not treated as fatal.
    """
    sources = list(tx_sources) if not isinstance(tx_sources, (list, tuple)) else tx_sources
    parse_stats = ParseStats()
    names: list[str] = []

    def stream() -> Iterator[Transaction]:
        for source in sources:
            if _is_pathlike(source):
                names.append(Path(source).name)
                yield from read_transactions(source, on_error=on_error, stats=parse_stats)
            else:
                yield source

    stats = IngestStats()
    flagged = list(
        dedupe_filter_stream(
            stream(),
            manifest=manifest,
            min_block=min_block,
            max_block=max_block,
            require_success=require_success,
            stats=stats,
        )
    )
    stats.skipped_records = parse_stats.skipped
    flagged.sort(key=lambda pair: pair[0].block_number)
    transactions = [tx for tx, _ in flagged]
    members = [member for _, member in flagged]
    if manifest is not None:
        stats.unmatched_manifest = len(manifest) - stats.flashbots_members
    if stats.missing_status:
        logger.warning(
            "success filtering unavailable for %d record(s) without a status field",
            stats.missing_status,
        )

    block_range = None
    if transactions:
        block_range = (transactions[0].block_number, transactions[-1].block_number)
    if descriptor is None:
        descriptor = ",".join(names) if names else "in-memory stream"
    return Dataset(
        transactions=transactions,
        flashbots_member=members,
        block_range=block_range,
        source_descriptor=descriptor,
        stats=stats,
    )
