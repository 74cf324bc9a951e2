"""Record-level parsing and serialization for the on-disk interchange formats.

Transaction dumps are NDJSON (one object per line) or CSV, both with the
collected field names: ``hash``, ``blockNumber``, ``timestamp``, ``to``,
``from`` and an optional ``isError`` flag. Flashbots block manifests are
NDJSON objects carrying ``block_number`` and a ``transactions`` list whose
entries each hold a ``transaction_hash``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .model import Transaction, normalize_address, normalize_tx_hash

logger = logging.getLogger(__name__)

TX_FIELDS = ("hash", "blockNumber", "timestamp", "to", "from", "isError")
TX_REQUIRED = ("hash", "blockNumber", "timestamp", "from")


class ParseError(ValueError):
    """A record failed to parse; carries the 1-based line number when known."""

    def __init__(self, message: str, line_number: int | None = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


@dataclass(slots=True)
class ParseStats:
    """Counts accumulated while reading a record stream with skip-on-error."""

    parsed: int = 0
    skipped: int = 0
    first_errors: list[str] = field(default_factory=list)

    def record_error(self, exc: Exception) -> None:
        self.skipped += 1
        if len(self.first_errors) < 10:
            self.first_errors.append(str(exc))


def _as_int(value: object, name: str, line_number: int | None) -> int:
    if isinstance(value, bool):
        raise ParseError(f"field {name!r} must be an integer", line_number)
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        try:
            return int(value.strip())
        except ValueError:
            pass
    raise ParseError(f"field {name!r} is not a decimal integer: {value!r}", line_number)


def _as_success(value: object, line_number: int | None) -> bool | None:
    # isError semantics: "1" means the transaction failed, "0" that it succeeded.
    if value is None or value == "":
        return None
    if isinstance(value, bool):
        return not value
    text = str(value).strip()
    if text == "1":
        return False
    if text == "0":
        return True
    raise ParseError(f"field 'isError' must be 0 or 1, got {value!r}", line_number)


def transaction_from_mapping(
    obj: Mapping[str, object], line_number: int | None = None
) -> Transaction:
    """Build a validated Transaction from a decoded record mapping.

    Accepts ``timeStamp`` as an alias for ``timestamp`` (the capitalization
    used by common explorer APIs). An empty or missing ``to`` field means a
    contract creation (no recipient).
    """
    missing = [k for k in ("hash", "blockNumber", "from") if not obj.get(k)]
    if "timestamp" not in obj and "timeStamp" not in obj:
        missing.append("timestamp")
    if missing:
        raise ParseError(f"missing required field(s): {', '.join(sorted(missing))}", line_number)

    ts_raw = obj["timestamp"] if "timestamp" in obj else obj["timeStamp"]
    to_raw = obj.get("to")
    try:
        return Transaction(
            hash=normalize_tx_hash(str(obj["hash"])),
            block_number=_as_int(obj["blockNumber"], "blockNumber", line_number),
            timestamp=_as_int(ts_raw, "timestamp", line_number),
            sender=normalize_address(str(obj["from"])),
            recipient=None if to_raw in (None, "") else normalize_address(str(to_raw)),
            success=_as_success(obj.get("isError"), line_number),
        )
    except ParseError:
        raise
    except ValueError as exc:
        raise ParseError(str(exc), line_number) from exc


def parse_tx_record(
    line: str,
    fmt: str = "ndjson",
    columns: list[str] | None = None,
    line_number: int | None = None,
) -> Transaction:
    """Parse one transaction record in the declared format.

    For CSV the caller supplies ``columns`` (the header row); values are
    matched to columns positionally.
    """
    if fmt == "ndjson":
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", line_number) from exc
        if not isinstance(obj, dict):
            raise ParseError("record is not a JSON object", line_number)
        return transaction_from_mapping(obj, line_number)
    if fmt == "csv":
        if columns is None:
            raise ValueError("CSV parsing requires the header columns")
        row = next(csv.reader([line]))
        if len(row) != len(columns):
            raise ParseError(
                f"expected {len(columns)} fields, got {len(row)}", line_number
            )
        return transaction_from_mapping(dict(zip(columns, row)), line_number)
    raise ValueError(f"unknown record format {fmt!r}")


def _detect_format(path: Path) -> str:
    return "csv" if path.suffix.lower() == ".csv" else "ndjson"


def read_transactions(
    path: str | Path,
    fmt: str | None = None,
    on_error: str = "raise",
    stats: ParseStats | None = None,
) -> Iterator[Transaction]:
    """Stream transactions from an NDJSON or CSV dump.

    ``on_error`` is either ``"raise"`` (abort on the first bad record) or
    ``"skip"`` (count the record in ``stats`` and continue).
    """
    if on_error not in ("raise", "skip"):
        raise ValueError(f"on_error must be 'raise' or 'skip', got {on_error!r}")
    path = Path(path)
    fmt = fmt or _detect_format(path)
    stats = stats if stats is not None else ParseStats()

    with open(path, encoding="utf-8", newline="") as fh:
        if fmt == "csv":
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                return
            unknown = [c for c in TX_REQUIRED if c not in header]
            if unknown:
                raise ParseError(f"CSV header is missing column(s): {', '.join(unknown)}", 1)
            for line_number, row in enumerate(reader, 2):
                if not row:
                    continue
                try:
                    if len(row) != len(header):
                        raise ParseError(
                            f"expected {len(header)} fields, got {len(row)}", line_number
                        )
                    tx = transaction_from_mapping(dict(zip(header, row)), line_number)
                except ParseError as exc:
                    if on_error == "raise":
                        raise
                    stats.record_error(exc)
                    continue
                stats.parsed += 1
                yield tx
        else:
            for line_number, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    tx = parse_tx_record(line, "ndjson", line_number=line_number)
                except ParseError as exc:
                    if on_error == "raise":
                        raise
                    stats.record_error(exc)
                    continue
                stats.parsed += 1
                yield tx

    if stats.skipped:
        logger.warning("skipped %d unparseable record(s) in %s", stats.skipped, path)


def transaction_to_mapping(tx: Transaction) -> dict[str, object]:
    """Serialize a Transaction to the canonical record mapping."""
    obj: dict[str, object] = {
        "hash": tx.hash,
        "blockNumber": tx.block_number,
        "timestamp": tx.timestamp,
        "to": tx.recipient if tx.recipient is not None else "",
        "from": tx.sender,
    }
    if tx.success is not None:
        obj["isError"] = "0" if tx.success else "1"
    return obj


def transaction_to_ndjson(tx: Transaction) -> str:
    return json.dumps(transaction_to_mapping(tx), separators=(",", ":"))


def write_transactions_ndjson(txs: Iterable[Transaction], path: str | Path) -> int:
    """Write transactions as canonical NDJSON; returns the record count."""
    count = 0
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for tx in txs:
            fh.write(transaction_to_ndjson(tx))
            fh.write("\n")
            count += 1
    return count


def write_transactions_csv(txs: Iterable[Transaction], path: str | Path) -> int:
    """Write transactions as CSV with the canonical header; returns the count."""
    count = 0
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TX_FIELDS)
        for tx in txs:
            obj = transaction_to_mapping(tx)
            writer.writerow([obj.get(name, "") for name in TX_FIELDS])
            count += 1
    return count


def transaction_to_csv_row(tx: Transaction) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="")
    obj = transaction_to_mapping(tx)
    writer.writerow([obj.get(name, "") for name in TX_FIELDS])
    return buf.getvalue()


def flashbots_pairs_from_mapping(
    obj: Mapping[str, object], line_number: int | None = None
) -> list[tuple[int, str]]:
    """Extract (block_number, tx_hash) pairs from one Flashbots block record."""
    if "block_number" not in obj:
        raise ParseError("missing required field 'block_number'", line_number)
    block = _as_int(obj["block_number"], "block_number", line_number)
    raw_txs = obj.get("transactions", [])
    if not isinstance(raw_txs, list):
        raise ParseError("field 'transactions' must be a list", line_number)
    pairs = []
    for entry in raw_txs:
        if not isinstance(entry, Mapping) or "transaction_hash" not in entry:
            raise ParseError(
                "each bundled transaction must carry a 'transaction_hash'", line_number
            )
        try:
            pairs.append((block, normalize_tx_hash(str(entry["transaction_hash"]))))
        except ValueError as exc:
            raise ParseError(str(exc), line_number) from exc
    return pairs


def parse_flashbots_block_record(
    line: str, line_number: int | None = None
) -> list[tuple[int, str]]:
    """Parse one NDJSON Flashbots block record into (block, hash) pairs.

    A block with no bundled transactions yields an empty list. Duplicate
    hashes across records are emitted as-is; deduplication happens when the
    manifest is assembled.
    """
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line_number) from exc
    if not isinstance(obj, dict):
        raise ParseError("record is not a JSON object", line_number)
    return flashbots_pairs_from_mapping(obj, line_number)


def read_flashbots_records(
    path: str | Path,
    on_error: str = "raise",
    stats: ParseStats | None = None,
) -> Iterator[tuple[int, str]]:
    """Stream (block_number, tx_hash) pairs from a Flashbots manifest file."""
    if on_error not in ("raise", "skip"):
        raise ValueError(f"on_error must be 'raise' or 'skip', got {on_error!r}")
    stats = stats if stats is not None else ParseStats()
    with open(path, encoding="utf-8", newline="") as fh:
        for line_number, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                pairs = parse_flashbots_block_record(line, line_number)
            except ParseError as exc:
                if on_error == "raise":
                    raise
                stats.record_error(exc)
                continue
            stats.parsed += 1
            yield from pairs


def write_flashbots_manifest(pairs: Iterable[tuple[int, str]], path: str | Path) -> int:
    """Write (block, hash) pairs as NDJSON block records; returns pair count.

    Pairs are grouped by block number in first-seen order, matching the
    manifest interchange format.
    """
    by_block: dict[int, list[str]] = {}
    count = 0
    for block, tx_hash in pairs:
        by_block.setdefault(block, []).append(tx_hash)
        count += 1
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for block, hashes in by_block.items():
            record = {
                "block_number": block,
                "transactions": [{"transaction_hash": h} for h in hashes],
            }
            fh.write(json.dumps(record, separators=(",", ":")))
            fh.write("\n")
    return count


def read_seed_accounts(path: str | Path) -> set[str]:
    """Read a seed-account file: one address per line, ``#`` comments allowed."""
    seed: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, 1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            try:
                seed.add(normalize_address(text))
            except ValueError as exc:
                raise ParseError(str(exc), line_number) from exc
    return seed
