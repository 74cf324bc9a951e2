"""Derived measures: volume series, degree growth rankings, CCDFs, and tags."""

from __future__ import annotations

import csv
import logging
from bisect import bisect_left
from dataclasses import dataclass, field
from datetime import date
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .model import NO_PUBLIC_TAG, Tag, normalize_address, shorten_address
from .temporal import DIRECTIONS, DegreeRecord, WindowPartition

logger = logging.getLogger(__name__)

TAG_FILE_HEADER = ("address", "label", "kind")


@dataclass(slots=True)
class VolumeSeries:
    """Daily transaction counts over a contiguous day range."""

    days: list[date]
    counts: list[int]

    def __post_init__(self) -> None:
        if len(self.days) != len(self.counts):
            raise ValueError("days and counts must have the same length")

    def total(self) -> int:
        return sum(self.counts)

    def __len__(self) -> int:
        return len(self.days)


def volume_series(day_partition: WindowPartition) -> VolumeSeries:
    """Count window-assigned transactions per day of a utc_day partition."""
    if day_partition.spec.mode != "utc_day":
        raise ValueError("volume series requires a utc_day partition")
    days = [date.fromisoformat(window.label) for window, _ in day_partition]
    counts = [len(txs) for _, txs in day_partition]
    return VolumeSeries(days=days, counts=counts)


def _direction_value(record: DegreeRecord, direction: str) -> int:
    if direction == "in":
        return record.indegree
    if direction == "out":
        return record.outdegree
    return record.total


@dataclass(frozen=True, slots=True)
class GrowthRecord:
    """One account's degree change between two consecutive windows."""

    account: str
    degree_prev: int
    degree_next: int
    window_pair: tuple[int, int]
    metric: str
    direction: str

    @property
    def delta(self) -> int:
        return self.degree_next - self.degree_prev


def degree_growth(
    prev: Mapping[str, DegreeRecord],
    next: Mapping[str, DegreeRecord],
    direction: str = "total",
    window_pair: tuple[int, int] | None = None,
) -> list[GrowthRecord]:
    """Degree deltas over the union of accounts in two degree tables.

    Accounts absent from one side have degree zero there, so deltas can be
    negative. Both tables must have been computed under the same metric.
    """
    if direction not in DIRECTIONS:
        raise ValueError(f"unknown direction {direction!r}; expected one of {DIRECTIONS}")
    metrics = {rec.metric for rec in prev.values()} | {rec.metric for rec in next.values()}
    if len(metrics) > 1:
        raise ValueError(f"degree tables use different metrics: {sorted(metrics)}")
    metric = metrics.pop() if metrics else "distinct"
    window_pair = window_pair if window_pair is not None else (1, 2)

    records = []
    for account in sorted(prev.keys() | next.keys()):
        before = prev.get(account)
        after = next.get(account)
        records.append(
            GrowthRecord(
                account=account,
                degree_prev=_direction_value(before, direction) if before else 0,
                degree_next=_direction_value(after, direction) if after else 0,
                window_pair=window_pair,
                metric=metric,
                direction=direction,
            )
        )
    return records


@dataclass(frozen=True, slots=True)
class RankedAccount:
    """One row of a growth ranking: shortened address, label, and delta."""

    address: str
    short_address: str
    label: str
    delta: int
    degree_prev: int
    degree_next: int


# Ranking ties are broken by the larger following-window degree, then by the
# full address; this rule is the artifact's own and is echoed in output footers.
TIE_RULE_NOTE = (
    "Ties broken by larger following-window degree, then by full address; "
    "addresses shortened to their last seven characters."
)


def top_k_growth(
    records: Iterable[GrowthRecord],
    k: int = 10,
    tags: "TagMap | None" = None,
    bottom: bool = False,
) -> list[RankedAccount]:
    """Rank growth records by delta and resolve display labels.

    Descending by default; ``bottom`` flips the order for exploring the
    largest decreases. Fewer than ``k`` records simply yield a shorter table.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if bottom:
        key = lambda r: (r.delta, r.degree_next, r.account)  # noqa: E731
    else:
        key = lambda r: (-r.delta, -r.degree_next, r.account)  # noqa: E731
    ranked = sorted(records, key=key)[:k]
    out = []
    for record in ranked:
        label = tags.get(record.account).label if tags is not None else NO_PUBLIC_TAG
        out.append(
            RankedAccount(
                address=record.account,
                short_address=shorten_address(record.account),
                label=label,
                delta=record.delta,
                degree_prev=record.degree_prev,
                degree_next=record.degree_next,
            )
        )
    return out


@dataclass(frozen=True, slots=True)
class CcdfPoint:
    degree: int
    fraction: float


def degree_ccdf(
    table: Mapping[str, DegreeRecord] | Iterable[DegreeRecord],
    direction: str = "total",
) -> list[CcdfPoint]:
    """Complementary cumulative degree distribution over accounts.

    One point per observed degree value >= 1; the fraction at degree d is
    the share of accounts with degree >= d among accounts with degree >= 1.
    An all-zero table yields an empty sequence.
    """
    if direction not in DIRECTIONS:
        raise ValueError(f"unknown direction {direction!r}; expected one of {DIRECTIONS}")
    records = table.values() if isinstance(table, Mapping) else table
    degrees = sorted(v for v in (_direction_value(r, direction) for r in records) if v >= 1)
    n = len(degrees)
    if n == 0:
        return []
    points = []
    for degree in sorted(set(degrees)):
        at_least = n - bisect_left(degrees, degree)
        points.append(CcdfPoint(degree=degree, fraction=at_least / n))
    return points


@dataclass(slots=True)
class TagMap:
    """Address-to-tag lookup with a sentinel for unlabeled accounts."""

    entries: dict[str, Tag] = field(default_factory=dict)
    duplicates: int = 0
    skipped: int = 0
    source: str = ""

    def get(self, address: str) -> Tag:
        normalized = normalize_address(address)
        found = self.entries.get(normalized)
        if found is not None:
            return found
        return Tag(address=normalized, label=NO_PUBLIC_TAG, kind="unknown")

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, address: str) -> bool:
        return normalize_address(address) in self.entries


def load_tag_map(path: str | Path) -> TagMap:
    """Load a tag file: CSV with header ``address,label,kind``.

    Malformed rows are skipped and counted; duplicate addresses override
    earlier rows, also counted, so a curated file can layer corrections.
    """
    path = Path(path)
    tag_map = TagMap(source=path.name)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError(f"tag file {path} is empty") from None
        if header[: len(TAG_FILE_HEADER)] != list(TAG_FILE_HEADER):
            raise ValueError(
                f"tag file {path} must start with header {','.join(TAG_FILE_HEADER)}"
            )
        for row in reader:
            if not row or not any(cell.strip() for cell in row):
                continue
            try:
                if len(row) < 3:
                    raise ValueError(f"expected 3 columns, got {len(row)}")
                tag = Tag(
                    address=normalize_address(row[0].strip()),
                    label=row[1].strip(),
                    kind=row[2].strip() or "unknown",
                )
            except ValueError:
                tag_map.skipped += 1
                continue
            if tag.address in tag_map.entries:
                tag_map.duplicates += 1
            tag_map.entries[tag.address] = tag
    if tag_map.duplicates:
        logger.warning("%d duplicate address row(s) in %s; last row wins", tag_map.duplicates, path)
    if tag_map.skipped:
        logger.warning("skipped %d malformed tag row(s) in %s", tag_map.skipped, path)
    return tag_map


def bundled_tags_path() -> Path:
    """Path of the bundled tag file covering well-known public addresses."""
    return Path(str(resources.files("ethergraph").joinpath("data/known_tags.csv")))
