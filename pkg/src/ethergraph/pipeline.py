"""End-to-end analysis runs: one streaming pass from records to a report bundle.

The runner consumes a flagged transaction stream (transaction, is-member)
exactly once, accumulating day buckets for the volume/activity series and
per-window multigraphs for the degree analyses. Retained state is bounded by
distinct accounts and distinct edges (plus one fixed-size dedup key per hash
upstream), so million-transaction corpora don't need to be materialized.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Iterable, Iterator

from . import __version__
from .analytics import (
    CcdfPoint,
    GrowthRecord,
    RankedAccount,
    TIE_RULE_NOTE,
    TagMap,
    VolumeSeries,
    degree_ccdf,
    degree_growth,
    top_k_growth,
)
from .dataset import Dataset, FlashbotsManifest, IngestStats, dedupe_filter_stream
from .model import Transaction
from .records import ParseStats, read_transactions
from .report import AxisSpec, ChartSeries, ReportBundle, render_line_chart, series_csv
from .temporal import (
    ActivitySeries,
    DegreeRecord,
    Window,
    WindowGraph,
    WindowSpec,
    date_to_day,
    day_to_date,
    degree_table,
    fold_activity,
    make_key_fn,
    resolve_window_keys,
)

VIEWS = ("full", "flashbots")


@dataclass(frozen=True)
class Preset:
    """A canned study window: week scheme plus the matching block filter."""

    name: str
    window: WindowSpec
    min_block: int
    max_block: int
    description: str


PRESETS: dict[str, Preset] = {
    "feb2022-study": Preset(
        name="feb2022-study",
        window=WindowSpec.weeks(date(2022, 2, 10), 4),
        min_block=14174989,
        max_block=14355747,
        description=(
            "Four UTC weeks anchored 2022-02-10 over the closed block "
            "interval 14174989..14355747"
        ),
    ),
}


@dataclass
class AnalysisOptions:
    """Knobs for one analysis run over one view."""

    window: WindowSpec
    view: str = "full"
    metric: str = "distinct"
    direction: str = "total"
    k: int = 10
    bottom: bool = False
    pair: tuple[int, int] | None = None
    seed: frozenset[str] = frozenset()
    tags: TagMap | None = None
    first_day_excludes_seed: bool = False
    charts: bool = True

    def __post_init__(self) -> None:
        if self.view not in VIEWS:
            raise ValueError(f"unknown view {self.view!r}; expected one of {VIEWS}")
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.pair is not None:
            a, b = self.pair
            if not (1 <= a < b):
                raise ValueError(f"window pair must satisfy 1 <= a < b, got {self.pair}")


def _day_spec_for(window: WindowSpec) -> WindowSpec:
    """Day scheme matching a degree-window scheme for the daily series."""
    if window.mode == "utc_day":
        return window
    if window.mode == "utc_week":
        count = window.count * 7 if window.count is not None else None
        return WindowSpec.days(window.anchor, count)
    return WindowSpec.days()  # block windows: cover the observed day span


@dataclass
class PairRanking:
    pair: tuple[int, int]
    caption: str
    rows: list[RankedAccount]
    records: list[GrowthRecord] = field(repr=False, default_factory=list)


@dataclass
class AnalysisResult:
    options: AnalysisOptions
    volume: VolumeSeries
    activity: ActivitySeries
    windows: list[Window]
    degree_tables: list[dict[str, DegreeRecord]]
    rankings: list[PairRanking]
    ccdfs: list[dict[str, list[CcdfPoint]]]  # per window: direction -> points
    counts: dict[str, int]


_WINDOW_TERMS = {"utc_day": "days", "utc_week": "weeks", "block_range": "windows"}


def _caption(options: AnalysisOptions, pair: tuple[int, int]) -> str:
    head = "Bottom" if options.bottom else "Top"
    term = _WINDOW_TERMS[options.window.mode]
    return (
        f"{head} {options.k} degree growth, {term} {pair[0]}→{pair[1]} "
        f"({options.view} view, {options.metric} metric, {options.direction} degree)"
    )


def run_analysis(
    flagged: Iterable[tuple[Transaction, bool]], options: AnalysisOptions
) -> AnalysisResult:
    """Run the full analysis for one view over a flagged transaction stream.

    The stream is consumed exactly once. Every transaction is assigned to at
    most one degree window and at most one day; whatever falls outside is
    counted, never guessed at.
    """
    window_spec = options.window
    day_spec = _day_spec_for(window_spec)
    same_scheme = day_spec is window_spec
    window_key = make_key_fn(window_spec)
    day_key = make_key_fn(day_spec)
    flashbots_only = options.view == "flashbots"

    day_counts: dict[int, int] = {}
    day_accounts: dict[int, set[str]] = {}
    graphs: dict[int, WindowGraph] = {}
    stream_total = member_total = view_total = 0
    day_unassigned = window_unassigned = 0

    for tx, member in flagged:
        stream_total += 1
        if member:
            member_total += 1
        elif flashbots_only:
            continue
        view_total += 1
        day = tx.timestamp // 86400
        block = tx.block_number

        dk = day_key(block, day)
        if dk is None:
            day_unassigned += 1
        else:
            day_counts[dk] = day_counts.get(dk, 0) + 1
            accounts = day_accounts.get(dk)
            if accounts is None:
                accounts = day_accounts[dk] = set()
            accounts.add(tx.sender)
            if tx.recipient is not None:
                accounts.add(tx.recipient)

        wk = dk if same_scheme else window_key(block, day)
        if wk is None:
            window_unassigned += 1
        else:
            graph = graphs.get(wk)
            if graph is None:
                graph = graphs[wk] = WindowGraph(0)
            graph.add(tx)

    # Daily series over the resolved day range, empty days included.
    day_keys = resolve_window_keys(day_spec, day_counts.keys())
    days = [day_to_date(k) for k, _ in day_keys]
    volume = VolumeSeries(days=days, counts=[day_counts.get(k, 0) for k, _ in day_keys])
    activity = fold_activity(
        days,
        [day_accounts.get(k, set()) for k, _ in day_keys],
        options.seed,
        options.first_day_excludes_seed,
    )

    # Degree windows in resolved order; empty windows get empty graphs.
    windows: list[Window] = []
    ordered_graphs: list[WindowGraph] = []
    for index, (key, label) in enumerate(resolve_window_keys(window_spec, graphs.keys()), 1):
        graph = graphs.get(key)
        if graph is None:
            graph = WindowGraph(index, label)
        else:
            graph.index = index
            graph.label = label
        windows.append(Window(index, label))
        ordered_graphs.append(graph)

    tables = [degree_table(g, options.metric) for g in ordered_graphs]
    ccdfs = [
        {"in": degree_ccdf(t, "in"), "out": degree_ccdf(t, "out")} for t in tables
    ]

    pairs: list[tuple[int, int]]
    if options.pair is not None:
        a, b = options.pair
        if b > len(windows):
            raise ValueError(
                f"window pair {options.pair} is out of range; only {len(windows)} window(s)"
            )
        pairs = [(a, b)]
    else:
        pairs = [(t, t + 1) for t in range(1, len(windows))]

    rankings = []
    for a, b in pairs:
        records = degree_growth(tables[a - 1], tables[b - 1], options.direction, (a, b))
        rows = top_k_growth(records, options.k, options.tags, options.bottom)
        rankings.append(
            PairRanking(pair=(a, b), caption=_caption(options, (a, b)), rows=rows, records=records)
        )

    counts = {
        "stream_transactions": stream_total,
        "flashbots_members": member_total,
        "view_transactions": view_total,
        "day_assigned": view_total - day_unassigned,
        "day_unassigned": day_unassigned,
        "window_assigned": view_total - window_unassigned,
        "window_unassigned": window_unassigned,
    }
    return AnalysisResult(
        options=options,
        volume=volume,
        activity=activity,
        windows=windows,
        degree_tables=tables,
        rankings=rankings,
        ccdfs=ccdfs,
        counts=counts,
    )


def run_analysis_from_files(
    tx_files: Iterable[str | Path],
    options: AnalysisOptions,
    *,
    manifest_file: str | Path | None = None,
    min_block: int | None = None,
    max_block: int | None = None,
    require_success: bool = False,
    on_error: str = "raise",
) -> AnalysisResult:
    """Stream dump files straight through the analysis, no materialization."""
    manifest = FlashbotsManifest.load(manifest_file, on_error) if manifest_file else None
    parse_stats = ParseStats()
    ingest_stats = IngestStats()

    def stream() -> Iterator[Transaction]:
        for path in tx_files:
            yield from read_transactions(path, on_error=on_error, stats=parse_stats)

    flagged = dedupe_filter_stream(
        stream(),
        manifest=manifest,
        min_block=min_block,
        max_block=max_block,
        require_success=require_success,
        stats=ingest_stats,
    )
    result = run_analysis(flagged, options)
    result.counts.update(
        {
            "records_read": ingest_stats.records_read,
            "skipped_records": parse_stats.skipped,
            "duplicates_dropped": ingest_stats.duplicates_dropped,
            "out_of_range": ingest_stats.out_of_range,
            "failed_dropped": ingest_stats.failed_dropped,
            "missing_status": ingest_stats.missing_status,
            "unmatched_manifest": (
                len(manifest) - ingest_stats.flashbots_members if manifest is not None else 0
            ),
        }
    )
    return result


def run_analysis_from_dataset(ds: Dataset, options: AnalysisOptions) -> AnalysisResult:
    result = run_analysis(ds.iter_flagged(), options)
    result.counts.update(
        {
            "duplicates_dropped": ds.stats.duplicates_dropped,
            "skipped_records": ds.stats.skipped_records,
            "unmatched_manifest": ds.stats.unmatched_manifest,
        }
    )
    return result


def _date_ticks(days: list[date], limit: int = 6) -> list[tuple[float, str]]:
    if not days:
        return []
    step = max(1, (len(days) - 1) // (limit - 1)) if len(days) > 1 else 1
    picked = list(range(0, len(days), step))
    if picked[-1] != len(days) - 1:
        picked.append(len(days) - 1)
    return [(float(date_to_day(days[i])), days[i].isoformat()) for i in picked]


def file_digest(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def build_bundle(result: AnalysisResult, run_info: dict | None = None) -> ReportBundle:
    """Assemble the report bundle: series CSVs, ranking tables, SVG charts.

    Artifact names carry the view, window, metric, and direction they were
    computed from; run metadata (including input digests when the caller
    provides them) lands in ``metadata.json``.
    """
    options = result.options
    view = options.view
    meta: dict[str, object] = {
        "tool": "ethergraph",
        "version": __version__,
        "timezone": "UTC",
        "day_boundary": "UTC midnight",
        "view": view,
        "metric": options.metric,
        "direction": options.direction,
        "k": options.k,
        "bottom": options.bottom,
        "seed_size": result.activity.seed_size,
        "window": options.window.describe(),
        "window_labels": [w.label for w in result.windows],
        "counts": result.counts,
        "tie_rule": TIE_RULE_NOTE,
        "ccdf_scale": "log-log",
    }
    if run_info:
        meta["run"] = run_info

    bundle = ReportBundle(metadata=meta)
    base_meta = {"view": view, "metric": options.metric, "tool_version": __version__}

    if result.volume.days:
        bundle.add(f"volume_daily_{view}.csv", "csv", series_csv(result.volume))
        if options.charts:
            xs = [float(date_to_day(d)) for d in result.volume.days]
            chart = render_line_chart(
                [ChartSeries("transactions", xs, [float(c) for c in result.volume.counts])],
                AxisSpec(
                    title=f"Daily transaction volume ({view} view)",
                    subtitle="UTC days",
                    x_label="day (UTC)",
                    y_label="transactions",
                    x_ticks=_date_ticks(result.volume.days),
                    metadata=dict(base_meta, series="volume_daily"),
                ),
            )
            bundle.add(f"volume_daily_{view}.svg", "svg", chart)

    if result.activity.days:
        bundle.add(f"activity_daily_{view}.csv", "csv", series_csv(result.activity))
        if options.charts:
            xs = [float(date_to_day(d)) for d in result.activity.days]
            chart = render_line_chart(
                [
                    ChartSeries("active accounts", xs, [float(v) for v in result.activity.active]),
                    ChartSeries("new accounts", xs, [float(v) for v in result.activity.new]),
                ],
                AxisSpec(
                    title=f"Active and new accounts per day ({view} view)",
                    subtitle=f"UTC days; seed size {result.activity.seed_size}",
                    x_label="day (UTC)",
                    y_label="accounts",
                    x_ticks=_date_ticks(result.activity.days),
                    metadata=dict(base_meta, series="activity_daily"),
                ),
            )
            bundle.add(f"activity_daily_{view}.svg", "svg", chart)

    from .report import render_markdown_table  # local import keeps module load light

    for ranking in result.rankings:
        a, b = ranking.pair
        name = f"growth_w{a}to{b}_{view}_{options.metric}_{options.direction}.md"
        bundle.add(name, "markdown", render_markdown_table(ranking.rows, ranking.caption))

    if options.charts:
        for window, curves in zip(result.windows, result.ccdfs):
            series = [
                ChartSeries(f"{direction}degree", [float(p.degree) for p in points],
                            [p.fraction for p in points])
                for direction, points in curves.items()
                if points
            ]
            if not series:
                continue
            chart = render_line_chart(
                series,
                AxisSpec(
                    title=f"Degree CCDF, window {window.index} ({view} view, {options.metric})",
                    subtitle=f"{window.label}; log-log axes; per-window degrees",
                    x_label="degree",
                    y_label="fraction of accounts ≥ degree",
                    x_log=True,
                    y_log=True,
                    metadata=dict(base_meta, window=window.index, window_label=window.label),
                ),
            )
            bundle.add(f"ccdf_w{window.index}_{view}_{options.metric}.svg", "svg", chart)

    meta["artifacts"] = [a.name for a in bundle.artifacts]
    return bundle
