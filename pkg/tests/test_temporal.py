import random
from datetime import date, datetime, timezone

import pytest

from ethergraph.model import Transaction
from ethergraph.temporal import (
    WindowGraph,
    WindowSpec,
    activity_series,
    build_window_graph,
    date_to_day,
    day_number,
    day_to_date,
    degree_table,
    partition_windows,
)

import oracles
from synth import make_corpus

A = "0x" + "aa" * 20
B = "0x" + "bb" * 20
C = "0x" + "cc" * 20

_counter = iter(range(1, 10**9))


def ts(text: str) -> int:
    return int(datetime.fromisoformat(text).replace(tzinfo=timezone.utc).timestamp())


def tx(sender, recipient, when="2022-02-10T12:00:00", block=None):
    stamp = ts(when) if isinstance(when, str) else when
    return Transaction(
        hash=f"0x{next(_counter):064x}",
        block_number=block if block is not None else stamp // 12,
        timestamp=stamp,
        sender=sender,
        recipient=recipient,
    )


class TestDayMath:
    def test_round_trips(self):
        d = date(2022, 2, 10)
        assert day_to_date(date_to_day(d)) == d

    def test_midnight_boundary(self):
        assert day_number(ts("2022-02-10T00:00:00")) == date_to_day(date(2022, 2, 10))
        assert day_number(ts("2022-02-10T23:59:59")) == date_to_day(date(2022, 2, 10))
        assert day_number(ts("2022-02-11T00:00:00")) == date_to_day(date(2022, 2, 11))


class TestWindowSpec:
    def test_week_requires_anchor(self):
        with pytest.raises(ValueError, match="anchor"):
            WindowSpec("utc_week")

    def test_unknown_mode(self):
        with pytest.raises(ValueError, match="mode"):
            WindowSpec("fortnight")

    def test_overlapping_ranges_rejected(self):
        with pytest.raises(ValueError, match="overlap"):
            WindowSpec.blocks([(1, 10), (5, 20)])

    def test_unordered_ranges_rejected(self):
        with pytest.raises(ValueError, match="overlap|order"):
            WindowSpec.blocks([(20, 30), (1, 10)])

    def test_empty_range_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            WindowSpec.blocks([(10, 5)])

    def test_count_positive(self):
        with pytest.raises(ValueError, match="count"):
            WindowSpec.days(date(2022, 2, 10), count=0)

    def test_day_count_requires_anchor(self):
        with pytest.raises(ValueError, match="anchor"):
            WindowSpec.days(count=7)


class TestPartition:
    def test_day_boundaries_inclusive(self):
        txs = [tx(A, B, "2022-02-10T00:00:00"), tx(A, B, "2022-02-10T23:59:59")]
        part = partition_windows(txs, WindowSpec.days())
        assert len(part.windows) == 1
        window, assigned = part.windows[0]
        assert window.label == "2022-02-10"
        assert len(assigned) == 2

    def test_week_anchored_2022_02_10(self):
        txs = [tx(A, B, "2022-02-16T08:00:00"), tx(A, C, "2022-02-17T08:00:00")]
        part = partition_windows(txs, WindowSpec.weeks(date(2022, 2, 10), 4))
        by_index = {w.index: assigned for w, assigned in part}
        assert len(by_index) == 4
        assert [t.recipient for t in by_index[1]] == [B]
        assert [t.recipient for t in by_index[2]] == [C]
        labels = [w.label for w, _ in part]
        assert labels[0] == "2022-02-10..2022-02-16"
        assert labels[1] == "2022-02-17..2022-02-23"

    def test_block_mode_outside_is_unassigned(self):
        spec = WindowSpec.blocks([(14174989, 14265470)])
        inside = tx(A, B, block=14265470)
        outside = tx(A, B, block=14265471)
        part = partition_windows([inside, outside], spec)
        assert part.unassigned == 1
        assert [len(assigned) for _, assigned in part] == [1]

    def test_study_gap_blocks_reported_not_guessed(self):
        spec = WindowSpec.blocks([(14174989, 14265470), (14265812, 14355747)])
        in_gap = tx(A, B, block=14265600)
        part = partition_windows([in_gap], spec)
        assert part.unassigned == 1
        assert all(not assigned for _, assigned in part)

    def test_interior_empty_days_kept(self):
        txs = [tx(A, B, "2022-02-10T10:00:00"), tx(A, B, "2022-02-12T10:00:00")]
        part = partition_windows(txs, WindowSpec.days())
        assert [w.label for w, _ in part] == ["2022-02-10", "2022-02-11", "2022-02-12"]
        assert [len(assigned) for _, assigned in part] == [1, 0, 1]

    def test_transactions_before_week_anchor_unassigned(self):
        txs = [tx(A, B, "2022-02-09T23:59:59")]
        part = partition_windows(txs, WindowSpec.weeks(date(2022, 2, 10), 2))
        assert part.unassigned == 1


class TestWindowGraph:
    def test_basic_construction(self):
        graph = build_window_graph([tx(A, B), tx(A, B), tx(A, C)])
        assert graph.vertices == {A, B, C}
        assert graph.edges == {(A, B): 2, (A, C): 1}
        assert graph.tx_total == 3

    def test_creation_only_sender_is_isolated_vertex(self):
        graph = build_window_graph([tx(A, None)])
        assert graph.vertices == {A}
        assert graph.edges == {}
        assert graph.tx_total == 0

    def test_self_transaction_is_loop_edge(self):
        graph = build_window_graph([tx(A, A)])
        assert graph.edges == {(A, A): 1}
        assert graph.vertices == {A}

    def test_edge_counts_match_pair_counting_oracle(self):
        corpus = make_corpus(seed=31, n_tx=1000, n_accounts=30, days=5)
        graph = build_window_graph(corpus.transactions)
        assert graph.edges == oracles.pair_counts(corpus.transactions)
        assert graph.tx_total == sum(graph.edges.values())

    def test_permutation_invariance(self):
        corpus = make_corpus(seed=32, n_tx=400, n_accounts=25, days=3)
        txs = list(corpus.transactions)
        graph_a = build_window_graph(txs)
        random.Random(1).shuffle(txs)
        graph_b = build_window_graph(txs)
        assert graph_a.vertices == graph_b.vertices
        assert graph_a.edges == graph_b.edges
        assert graph_a.tx_total == graph_b.tx_total


class TestDegreeTable:
    def test_metric_examples(self):
        graph = build_window_graph([tx(A, B), tx(A, B), tx(A, C)])
        distinct = degree_table(graph, "distinct")
        assert distinct[A].outdegree == 2 and distinct[A].indegree == 0
        assert distinct[B].indegree == 1
        counted = degree_table(graph, "tx_count")
        assert counted[A].outdegree == 3
        assert counted[B].indegree == 2
        assert counted[A].total == 3

    def test_self_edge_counts_both_directions(self):
        graph = build_window_graph([tx(A, A)])
        for metric in ("distinct", "tx_count"):
            record = degree_table(graph, metric)[A]
            assert record.indegree == 1 and record.outdegree == 1

    def test_isolated_vertex_has_zero_record(self):
        graph = build_window_graph([tx(A, None), tx(B, C)])
        table = degree_table(graph, "distinct")
        assert table[A].indegree == 0 and table[A].outdegree == 0
        assert set(table) == {A, B, C}

    def test_unknown_metric(self):
        with pytest.raises(ValueError, match="metric"):
            degree_table(build_window_graph([tx(A, B)]), "edges")

    def test_matches_recount_oracle(self):
        corpus = make_corpus(seed=33, n_tx=5000, n_accounts=120, days=6)
        graph = build_window_graph(corpus.transactions)
        for metric in ("distinct", "tx_count"):
            table = degree_table(graph, metric)
            expected = oracles.degree_table(corpus.transactions, metric)
            assert {a: (r.indegree, r.outdegree) for a, r in table.items()} == expected

    def test_sum_invariants(self):
        corpus = make_corpus(seed=34, n_tx=2000, n_accounts=80, days=4)
        graph = build_window_graph(corpus.transactions)
        counted = degree_table(graph, "tx_count")
        assert sum(r.indegree for r in counted.values()) == graph.tx_total
        assert sum(r.outdegree for r in counted.values()) == graph.tx_total
        distinct = degree_table(graph, "distinct")
        assert sum(r.indegree for r in distinct.values()) == len(graph.edges)
        assert sum(r.outdegree for r in distinct.values()) == len(graph.edges)
        for account in distinct:
            assert distinct[account].indegree <= counted[account].indegree
            assert distinct[account].outdegree <= counted[account].outdegree


class TestActivitySeries:
    def test_first_day_conventions(self):
        txs = [tx(A, C, "2022-02-10T09:00:00")]
        series = activity_series(txs, seed={A, B})
        assert series.cumulative == [3]
        assert series.active == [2]
        assert series.new == [3]  # first day reports the full cumulative count
        assert series.seed_size == 2
        seedless = activity_series(txs, seed={A, B}, first_day_excludes_seed=True)
        assert seedless.new == [1]

    def test_no_new_accounts_on_repeat_day(self):
        txs = [
            tx(A, C, "2022-02-10T09:00:00"),
            tx(A, C, "2022-02-11T09:00:00"),
            tx(C, A, "2022-02-11T10:00:00"),
        ]
        series = activity_series(txs, seed={A, B})
        assert series.cumulative == [3, 3]
        assert series.new == [3, 0]
        assert series.active == [2, 2]

    def test_requires_day_spec(self):
        with pytest.raises(ValueError, match="utc_day"):
            activity_series([], spec=WindowSpec.weeks(date(2022, 2, 10)))

    def test_matches_set_union_oracle(self):
        corpus = make_corpus(seed=35, n_tx=10_000, n_accounts=200, days=28)
        seed_accounts = set(corpus.accounts[:40])
        series = activity_series(corpus.transactions, seed=seed_accounts)
        days = oracles.day_range(corpus.start, corpus.days)
        cumulative, new, active = oracles.activity(corpus.transactions, seed_accounts, days)
        assert series.days == days
        assert series.cumulative == cumulative
        assert series.active == active
        assert series.new == new

    def test_invariants(self):
        corpus = make_corpus(seed=36, n_tx=3000, n_accounts=90, days=15)
        series = activity_series(corpus.transactions, seed=set(corpus.accounts[:10]))
        assert all(b >= a for a, b in zip(series.cumulative, series.cumulative[1:]))
        for t in range(1, len(series)):
            assert series.new[t] == series.cumulative[t] - series.cumulative[t - 1]
        assert all(a <= n for a, n in zip(series.active, series.cumulative))
        assert sum(series.new[1:]) == series.cumulative[-1] - series.cumulative[0]
