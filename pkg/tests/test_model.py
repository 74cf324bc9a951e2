import pytest
from hypothesis import given, strategies as st

from ethergraph.model import (
    Tag,
    Transaction,
    normalize_address,
    normalize_tx_hash,
    shorten_address,
)

COINBASE_MISC = "0xa090e606e30bd747d4e6245a1517ebe430f0057e"


class TestNormalizeAddress:
    def test_uppercase_is_lowered(self):
        raw = "0xA090E606E30BD747D4E6245A1517EBE430F0057E"
        assert normalize_address(raw) == COINBASE_MISC

    def test_already_normalized_is_unchanged(self):
        assert normalize_address(COINBASE_MISC) == COINBASE_MISC

    def test_short_input_rejected(self):
        with pytest.raises(ValueError, match="0x1234"):
            normalize_address("0x1234")

    def test_missing_prefix_accepted(self):
        assert normalize_address(COINBASE_MISC[2:]) == COINBASE_MISC

    def test_non_hex_rejected(self):
        with pytest.raises(ValueError, match="non-hexadecimal"):
            normalize_address("0x" + "zz" * 20)

    def test_underscores_rejected(self):
        # int() would accept these; the validator must not.
        with pytest.raises(ValueError):
            normalize_address("0x" + "a_" * 20)

    def test_non_string_rejected(self):
        with pytest.raises(ValueError, match="text"):
            normalize_address(1234)

    @given(st.text(alphabet="0123456789abcdef", min_size=40, max_size=40))
    def test_idempotent_and_case_insensitive(self, body):
        mixed = "0x" + "".join(
            c.upper() if i % 2 else c for i, c in enumerate(body)
        )
        normalized = normalize_address(mixed)
        assert normalized == normalize_address(normalized)
        assert normalized == "0x" + body


class TestShortenAddress:
    def test_known_account(self):
        assert shorten_address(COINBASE_MISC) == "0f0057e"

    def test_zero_address(self):
        assert shorten_address("0x" + "0" * 40) == "0000000"

    def test_pre_normalization_case(self):
        assert shorten_address("0xA090E606E30BD747D4E6245A1517EBE430F0057E") == "0f0057e"

    @given(st.text(alphabet="0123456789abcdefABCDEF", min_size=40, max_size=40))
    def test_always_seven_lowercase_chars(self, body):
        short = shorten_address("0x" + body)
        assert len(short) == 7
        assert short == body.lower()[-7:]


class TestTxHash:
    def test_normalizes_case(self):
        raw = "0x" + "AB" * 32
        assert normalize_tx_hash(raw) == "0x" + "ab" * 32

    def test_wrong_length_rejected(self):
        with pytest.raises(ValueError):
            normalize_tx_hash("0x" + "ab" * 20)


def _tx(tx_hash="0x" + "11" * 32, block=5, ts=100, sender="0x" + "aa" * 20):
    return Transaction(hash=tx_hash, block_number=block, timestamp=ts, sender=sender)


class TestTransaction:
    def test_equality_and_hash_by_tx_hash_only(self):
        a = _tx(block=5)
        b = _tx(block=99)
        assert a == b
        assert hash(a) == hash(b)
        assert len({a, b}) == 1

    def test_different_hash_not_equal(self):
        assert _tx() != _tx(tx_hash="0x" + "22" * 32)

    def test_rejects_non_positive_block(self):
        with pytest.raises(ValueError, match="block number"):
            _tx(block=0)

    def test_rejects_non_positive_timestamp(self):
        with pytest.raises(ValueError, match="timestamp"):
            _tx(ts=0)


class TestTag:
    def test_empty_label_rejected(self):
        with pytest.raises(ValueError, match="label"):
            Tag(address="0x" + "aa" * 20, label="", kind="contract")

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError, match="kind"):
            Tag(address="0x" + "aa" * 20, label="X", kind="robot")
