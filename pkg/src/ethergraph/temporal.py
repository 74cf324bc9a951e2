"""Windowing of a transaction collection into a sequence of directed graphs.

A window scheme slices the collection into disjoint, ordered windows: UTC
calendar days, 7-day UTC weeks from an anchor date, or explicit block-number
ranges. Each window yields a directed multigraph snapshot whose vertices are
accounts and whose edges count sender-to-recipient transfers; the day scheme
additionally drives the cumulative/new/active account series.

Day boundaries are UTC midnight throughout; timestamps are Unix seconds.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from datetime import date
from typing import Callable, Iterable, Iterator, Sequence

from .model import Transaction

SECONDS_PER_DAY = 86400
_EPOCH_ORDINAL = date(1970, 1, 1).toordinal()

WINDOW_MODES = ("utc_day", "utc_week", "block_range")
DEGREE_METRICS = ("distinct", "tx_count")
DIRECTIONS = ("in", "out", "total")


def day_number(timestamp: int) -> int:
    """UTC day index (days since the epoch) of a Unix timestamp."""
    return timestamp // SECONDS_PER_DAY


def day_to_date(day: int) -> date:
    return date.fromordinal(day + _EPOCH_ORDINAL)


def date_to_day(d: date) -> int:
    return d.toordinal() - _EPOCH_ORDINAL


@dataclass(frozen=True)
class WindowSpec:
    """Windowing scheme: mode plus anchor/count or explicit block ranges.

    ``anchor`` is the UTC date the first window starts on (required for
    weeks, optional for days). ``count`` fixes the number of windows; when
    omitted, windows extend to cover the observed data. Block ranges are
    closed intervals and must be disjoint and ordered.
    """

    mode: str
    anchor: date | None = None
    count: int | None = None
    block_ranges: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self) -> None:
        if self.mode not in WINDOW_MODES:
            raise ValueError(f"unknown window mode {self.mode!r}; expected one of {WINDOW_MODES}")
        if self.count is not None and self.count < 1:
            raise ValueError("window count must be at least 1")
        if self.mode == "utc_week" and self.anchor is None:
            raise ValueError("utc_week windows require an anchor date")
        if self.mode == "utc_day" and self.count is not None and self.anchor is None:
            raise ValueError("utc_day windows with a count require an anchor date")
        if self.mode == "block_range":
            if not self.block_ranges:
                raise ValueError("block_range windows require explicit block ranges")
            object.__setattr__(
                self, "block_ranges", tuple((int(a), int(b)) for a, b in self.block_ranges)
            )
            previous_end = None
            for start, end in self.block_ranges:
                if start > end:
                    raise ValueError(f"block range {start}-{end} is empty")
                if previous_end is not None and start <= previous_end:
                    raise ValueError("block ranges overlap or are out of order")
                previous_end = end
        elif self.block_ranges is not None:
            raise ValueError(f"block ranges are only valid in block_range mode, not {self.mode}")

    @classmethod
    def days(cls, anchor: date | None = None, count: int | None = None) -> "WindowSpec":
        return cls("utc_day", anchor=anchor, count=count)

    @classmethod
    def weeks(cls, anchor: date, count: int | None = None) -> "WindowSpec":
        return cls("utc_week", anchor=anchor, count=count)

    @classmethod
    def blocks(cls, ranges: Sequence[tuple[int, int]]) -> "WindowSpec":
        return cls("block_range", block_ranges=tuple(ranges))

    def describe(self) -> dict[str, object]:
        info: dict[str, object] = {"mode": self.mode}
        if self.anchor is not None:
            info["anchor"] = self.anchor.isoformat()
        if self.count is not None:
            info["count"] = self.count
        if self.block_ranges is not None:
            info["block_ranges"] = [list(r) for r in self.block_ranges]
        return info


def make_key_fn(spec: WindowSpec) -> Callable[[int, int], int | None]:
    """Build a fast ``(block_number, day) -> raw window key`` function.

    The raw key is an absolute day number, a week offset from the anchor, or
    a block-range position; ``None`` means the transaction falls outside all
    windows. Raw keys are mapped to contiguous 1-based indices at resolution
    time.
    """
    if spec.mode == "utc_day":
        anchor_day = date_to_day(spec.anchor) if spec.anchor is not None else None
        count = spec.count

        def day_key(block: int, day: int) -> int | None:
            if anchor_day is not None:
                rel = day - anchor_day
                if rel < 0 or (count is not None and rel >= count):
                    return None
            return day

        return day_key

    if spec.mode == "utc_week":
        anchor = date_to_day(spec.anchor)
        count = spec.count

        def week_key(block: int, day: int) -> int | None:
            rel = day - anchor
            if rel < 0:
                return None
            week = rel // 7
            if count is not None and week >= count:
                return None
            return week

        return week_key

    starts = [r[0] for r in spec.block_ranges]
    ends = [r[1] for r in spec.block_ranges]

    def block_key(block: int, day: int) -> int | None:
        i = bisect_right(starts, block) - 1
        if i >= 0 and block <= ends[i]:
            return i
        return None

    return block_key


def window_key(spec: WindowSpec, tx: Transaction) -> int | None:
    return make_key_fn(spec)(tx.block_number, day_number(tx.timestamp))


def resolve_window_keys(spec: WindowSpec, observed: Iterable[int]) -> list[tuple[int, str]]:
    """Enumerate the ordered (raw key, label) pairs for a run.

    Anchored specs with a count are resolved independently of the data;
    otherwise the window range extends to cover the observed keys, including
    any empty windows in between.
    """
    observed = list(observed)
    if spec.mode == "utc_day":
        if spec.anchor is not None:
            first = date_to_day(spec.anchor)
            if spec.count is not None:
                last = first + spec.count - 1
            elif observed:
                last = max(observed)
            else:
                return []
        else:
            if not observed:
                return []
            first, last = min(observed), max(observed)
        return [(d, day_to_date(d).isoformat()) for d in range(first, last + 1)]

    if spec.mode == "utc_week":
        if spec.count is not None:
            last_week = spec.count - 1
        elif observed:
            last_week = max(observed)
        else:
            return []
        anchor_day = date_to_day(spec.anchor)
        out = []
        for week in range(last_week + 1):
            start = day_to_date(anchor_day + 7 * week)
            end = day_to_date(anchor_day + 7 * week + 6)
            out.append((week, f"{start.isoformat()}..{end.isoformat()}"))
        return out

    return [
        (i, f"blocks {start}-{end}") for i, (start, end) in enumerate(spec.block_ranges)
    ]


@dataclass(frozen=True)
class Window:
    index: int  # 1-based position in the resolved sequence
    label: str


@dataclass
class WindowPartition:
    spec: WindowSpec
    windows: list[tuple[Window, list[Transaction]]]
    unassigned: int = 0

    def __iter__(self) -> Iterator[tuple[Window, list[Transaction]]]:
        return iter(self.windows)


def partition_windows(transactions: Iterable[Transaction], spec: WindowSpec) -> WindowPartition:
    """Assign each transaction to exactly one window, or to none.

    Assignment uses the UTC day of the timestamp for calendar modes and the
    block number for block-range mode. Empty windows inside the resolved
    range are kept (with empty subsequences) so series stay contiguous;
    transactions outside every window are only counted.
    """
    key_fn = make_key_fn(spec)
    buckets: dict[int, list[Transaction]] = {}
    unassigned = 0
    for tx in transactions:
        key = key_fn(tx.block_number, day_number(tx.timestamp))
        if key is None:
            unassigned += 1
            continue
        buckets.setdefault(key, []).append(tx)

    windows = [
        (Window(index, label), buckets.get(key, []))
        for index, (key, label) in enumerate(resolve_window_keys(spec, buckets), 1)
    ]
    return WindowPartition(spec=spec, windows=windows, unassigned=unassigned)


class WindowGraph:
    """Directed multigraph snapshot of one window.

    Vertices are every sender and recipient seen in the window. Edges map an
    ordered (sender, recipient) pair to a transaction count; self-transfers
    produce a loop edge. Contract creations contribute the sender as a
    vertex but no edge, so ``tx_total`` counts recipient-bearing
    transactions only.
    """

    __slots__ = ("index", "label", "vertices", "edges", "tx_total")

    def __init__(self, index: int, label: str = ""):
        self.index = index
        self.label = label
        self.vertices: set[str] = set()
        self.edges: dict[tuple[str, str], int] = {}
        self.tx_total = 0

    def add(self, tx: Transaction) -> None:
        self.vertices.add(tx.sender)
        recipient = tx.recipient
        if recipient is None:
            return
        self.vertices.add(recipient)
        key = (tx.sender, recipient)
        edges = self.edges
        edges[key] = edges.get(key, 0) + 1
        self.tx_total += 1

    @classmethod
    def from_transactions(
        cls, transactions: Iterable[Transaction], index: int = 1, label: str = ""
    ) -> "WindowGraph":
        graph = cls(index, label)
        for tx in transactions:
            graph.add(tx)
        return graph

    def __repr__(self) -> str:
        return (
            f"WindowGraph(index={self.index}, vertices={len(self.vertices)}, "
            f"edges={len(self.edges)}, tx_total={self.tx_total})"
        )


def build_window_graph(
    transactions: Iterable[Transaction], index: int = 1, label: str = ""
) -> WindowGraph:
    return WindowGraph.from_transactions(transactions, index, label)


@dataclass(frozen=True, slots=True)
class DegreeRecord:
    """Per-account degree in one window under one metric.

    ``distinct`` counts distinct counterparties per direction; ``tx_count``
    counts transactions. Isolated vertices (creation-only senders) get a
    record with zeros.
    """

    account: str
    indegree: int
    outdegree: int
    metric: str

    @property
    def total(self) -> int:
        return self.indegree + self.outdegree


def degree_table(graph: WindowGraph, metric: str = "distinct") -> dict[str, DegreeRecord]:
    """Compute the full degree table of a window graph.

    Returned in sorted account order so downstream output is deterministic.
    """
    if metric not in DEGREE_METRICS:
        raise ValueError(f"unknown degree metric {metric!r}; expected one of {DEGREE_METRICS}")
    indegree: dict[str, int] = {}
    outdegree: dict[str, int] = {}
    distinct = metric == "distinct"
    for (sender, recipient), count in graph.edges.items():
        weight = 1 if distinct else count
        outdegree[sender] = outdegree.get(sender, 0) + weight
        indegree[recipient] = indegree.get(recipient, 0) + weight
    return {
        account: DegreeRecord(account, indegree.get(account, 0), outdegree.get(account, 0), metric)
        for account in sorted(graph.vertices)
    }


@dataclass(slots=True)
class ActivitySeries:
    """Per-day cumulative, new, and active account counts.

    ``cumulative[t]`` is the size of the account set after absorbing day t
    (starting from the injected seed set); ``new[t]`` is the day-over-day
    difference, with the first day reporting the full cumulative count
    unless the series was built seed-excluded; ``active[t]`` counts distinct
    accounts transacting on day t.
    """

    days: list[date]
    cumulative: list[int]
    new: list[int]
    active: list[int]
    seed_size: int

    def __len__(self) -> int:
        return len(self.days)


def fold_activity(
    days: Sequence[date],
    accounts_by_day: Sequence[set[str]],
    seed: Iterable[str] = (),
    first_day_excludes_seed: bool = False,
) -> ActivitySeries:
    """Fold ordered per-day account sets into an activity series."""
    cumulative_set = set(seed)
    seed_size = len(cumulative_set)
    cumulative: list[int] = []
    new: list[int] = []
    active: list[int] = []
    previous = seed_size if first_day_excludes_seed else 0
    for day_accounts in accounts_by_day:
        active.append(len(day_accounts))
        cumulative_set |= day_accounts
        total = len(cumulative_set)
        cumulative.append(total)
        new.append(total - previous)
        previous = total
    return ActivitySeries(
        days=list(days), cumulative=cumulative, new=new, active=active, seed_size=seed_size
    )


def activity_series(
    transactions: Iterable[Transaction],
    seed: Iterable[str] = (),
    spec: WindowSpec | None = None,
    first_day_excludes_seed: bool = False,
) -> ActivitySeries:
    """Build the daily cumulative/new/active account series.

    ``spec`` must be a ``utc_day`` scheme (the default covers the observed
    span). The seed set is injected before day one so previously seen
    accounts are not reported as new; addresses in it must already be
    normalized.
    """
    spec = spec if spec is not None else WindowSpec.days()
    if spec.mode != "utc_day":
        raise ValueError("activity series requires a utc_day window spec")
    partition = partition_windows(transactions, spec)
    days: list[date] = []
    accounts_by_day: list[set[str]] = []
    for window, txs in partition:
        days.append(date.fromisoformat(window.label))
        accounts = set()
        for tx in txs:
            accounts.add(tx.sender)
            if tx.recipient is not None:
                accounts.add(tx.recipient)
        accounts_by_day.append(accounts)
    return fold_activity(days, accounts_by_day, seed, first_day_excludes_seed)
