"""Core domain types shared by every other module.

Account and transaction identifiers are plain strings kept in a canonical
form: lowercase hexadecimal with a ``0x`` prefix. Normalization happens at
the parsing boundary; everything downstream can compare identifiers with
plain ``==``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

ADDRESS_LENGTH = 42  # "0x" + 20 bytes
TX_HASH_LENGTH = 66  # "0x" + 32 bytes

TAG_KINDS = ("contract", "user", "unknown")
NO_PUBLIC_TAG = "No public tag"

_HEX_BODY = re.compile(r"[0-9a-f]+\Z")


def _normalize_hex_id(raw: str, length: int, what: str) -> str:
    if not isinstance(raw, str):
        raise ValueError(f"{what} must be text, got {type(raw).__name__}")
    text = raw.strip().lower()
    if not text.startswith("0x"):
        text = "0x" + text
    if len(text) != length:
        raise ValueError(
            f"malformed {what} {raw!r}: expected {length} characters "
            f"including the 0x prefix, got {len(text)}"
        )
    if not _HEX_BODY.match(text, 2):
        raise ValueError(f"malformed {what} {raw!r}: non-hexadecimal characters")
    return text


def normalize_address(raw: str) -> str:
    """Return the canonical lowercase 42-character form of an account id.

    Mixed-case (checksummed) input is accepted; case is discarded. The
    ``0x`` prefix may be omitted in the input.
    """
    return _normalize_hex_id(raw, ADDRESS_LENGTH, "address")


def normalize_tx_hash(raw: str) -> str:
    """Return the canonical lowercase 66-character form of a transaction hash."""
    return _normalize_hex_id(raw, TX_HASH_LENGTH, "transaction hash")


def shorten_address(addr: str) -> str:
    """Shorten an address to its last seven characters, as used in rankings."""
    return normalize_address(addr)[-7:]


@dataclass(frozen=True, slots=True, eq=False)
class Transaction:
    """One external transfer record.

    ``recipient`` is ``None`` for contract creations. ``success`` is a
    tri-state: ``True``/``False`` when the source carried a status flag,
    ``None`` when it did not. Equality and hashing use the transaction
    hash alone, which is also the deduplication key.
    """

    hash: str
    block_number: int
    timestamp: int
    sender: str
    recipient: str | None = None
    success: bool | None = None

    def __post_init__(self) -> None:
        if self.block_number <= 0:
            raise ValueError(f"block number must be positive, got {self.block_number}")
        if self.timestamp <= 0:
            raise ValueError(f"timestamp must be positive, got {self.timestamp}")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Transaction):
            return NotImplemented
        return self.hash == other.hash

    def __hash__(self) -> int:
        return hash(self.hash)


@dataclass(frozen=True, slots=True)
class Tag:
    """A public human-readable label for an address."""

    address: str
    label: str
    kind: str = "unknown"

    def __post_init__(self) -> None:
        if not self.label:
            raise ValueError("tag label must be non-empty")
        if self.kind not in TAG_KINDS:
            raise ValueError(f"tag kind must be one of {TAG_KINDS}, got {self.kind!r}")
