"""Command-line client for batch runs.

The CLI is a thin client over the HTTP service. By default it runs the
service in-process (no network, same filesystem), which keeps one-shot
batch runs self-contained; ``--server`` points it at a remote instance
instead. Exit codes: 0 on success, 1 on fatal errors, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import shlex
import sys
from pathlib import Path

import httpx


def _parse_block_ranges(text: str) -> list[tuple[int, int]]:
    ranges = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        start, sep, end = part.partition("-")
        if not sep:
            raise ValueError(f"block range {part!r} must look like START-END")
        ranges.append((int(start), int(end)))
    if not ranges:
        raise ValueError("no block ranges given")
    return ranges


def _parse_pair(text: str) -> tuple[int, int]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise ValueError(f"pair {text!r} must look like A,B")
    return int(parts[0]), int(parts[1])


def make_client(server: str | None) -> httpx.Client:
    """HTTP client against a remote server, or the app run in-process."""
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    from fastapi.testclient import TestClient

    from .service import app

    return TestClient(app, raise_server_exceptions=False)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ethergraph",
        description="Temporal graph analytics over Ethereum-style transaction dumps",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--server", metavar="URL", help="remote service URL (default: in-process)")

    ingest = sub.add_parser(
        "ingest",
        parents=[common],
        help="normalize transaction dumps, or fetch them from the configured endpoints",
    )
    ingest.add_argument("--txs", nargs="+", metavar="FILE", help="transaction dump files (NDJSON or CSV)")
    ingest.add_argument("--endpoint", metavar="CONFIG", help="endpoint config file (key=value) for fetching")
    ingest.add_argument("--blocks", metavar="START-END", help="block interval to fetch")
    ingest.add_argument("--flashbots-manifest", metavar="FILE", help="Flashbots manifest NDJSON")
    ingest.add_argument(
        "--fetch-flashbots", action="store_true", help="also fetch the Flashbots manifest"
    )
    ingest.add_argument("--min-block", type=int)
    ingest.add_argument("--max-block", type=int)
    ingest.add_argument(
        "--require-success",
        action="store_true",
        help="drop failed transactions (records without a status field are kept and counted)",
    )
    ingest.add_argument(
        "--skip-bad-records", action="store_true", help="skip unparseable records instead of aborting"
    )
    ingest.add_argument("--resume", action="store_true", help="resume an interrupted fetch from its checkpoint")
    ingest.add_argument("--out", required=True, metavar="DIR", help="output directory")

    analyze = sub.add_parser(
        "analyze",
        parents=[common],
        help="run windowing, series, degree tables, CCDFs, and growth rankings",
    )
    analyze.add_argument("--txs", nargs="+", required=True, metavar="FILE")
    analyze.add_argument("--flashbots-manifest", metavar="FILE")
    analyze.add_argument(
        "--tags", metavar="FILE", help="tag CSV (address,label,kind); 'builtin' for the bundled file"
    )
    analyze.add_argument("--seed-accounts", metavar="FILE", help="seed addresses, one per line")
    analyze.add_argument("--preset", choices=["feb2022-study"], help="canned study window and block filter")
    analyze.add_argument("--window", choices=["day", "week", "blocks"], default="day")
    analyze.add_argument("--anchor", metavar="DATE", help="first window's UTC date (YYYY-MM-DD)")
    analyze.add_argument("--count", type=int, metavar="N", help="number of windows")
    analyze.add_argument("--blocks", metavar="RANGES", help="explicit block windows, e.g. 100-199,200-299")
    analyze.add_argument("--metric", choices=["distinct", "txcount"], default="distinct")
    analyze.add_argument("--direction", choices=["in", "out", "total"], default="total")
    analyze.add_argument("--k", type=int, default=10)
    analyze.add_argument("--bottom", action="store_true", help="rank the largest decreases instead")
    analyze.add_argument("--pair", metavar="A,B", help="only this window pair, e.g. 2,3")
    analyze.add_argument("--view", choices=["full", "flashbots"], default="full")
    analyze.add_argument("--min-block", type=int)
    analyze.add_argument("--max-block", type=int)
    analyze.add_argument("--require-success", action="store_true")
    analyze.add_argument("--skip-bad-records", action="store_true")
    analyze.add_argument(
        "--first-day-new",
        choices=["all", "excluding-seed"],
        default="all",
        help="first-day new-account convention: full cumulative count, or seed excluded",
    )
    analyze.add_argument("--no-charts", action="store_true", help="skip SVG chart artifacts")
    analyze.add_argument("--out", required=True, metavar="DIR", help="report bundle directory")

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8321)

    return parser


def _fail(response: httpx.Response) -> int:
    try:
        detail = response.json().get("detail", response.text)
    except ValueError:
        detail = response.text
    print(f"error: {detail}", file=sys.stderr)
    return 1


def _cmd_ingest(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if bool(args.txs) == bool(args.endpoint):
        parser.error("exactly one of --txs or --endpoint must be given")
    body: dict = {
        "out_dir": args.out,
        "resume": args.resume,
        "min_block": args.min_block,
        "max_block": args.max_block,
        "require_success": args.require_success,
        "on_parse_error": "skip" if args.skip_bad_records else "raise",
        "fetch_flashbots": args.fetch_flashbots,
        "flashbots_manifest": args.flashbots_manifest,
    }
    if args.endpoint:
        if args.blocks is None:
            parser.error("--endpoint requires --blocks START-END")
        try:
            ranges = _parse_block_ranges(args.blocks)
        except ValueError as exc:
            parser.error(str(exc))
        if len(ranges) != 1:
            parser.error("ingest takes a single --blocks interval")
        body["endpoint"] = {
            "config_file": args.endpoint,
            "start_block": ranges[0][0],
            "end_block": ranges[0][1],
        }
    else:
        body["tx_files"] = args.txs

    with make_client(args.server) as client:
        response = client.post("/ingest", json=body)
    if response.status_code != 200:
        return _fail(response)
    summary = response.json()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "ingest_summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline=""
    )
    print(f"dataset written: {summary['dataset_file']} ({summary['records_written']} records)")
    if summary.get("manifest_file"):
        print(f"flashbots manifest: {summary['manifest_file']}")
    print(
        f"read {summary['records_read']} records; "
        f"duplicates dropped {summary['duplicates_dropped']}, "
        f"skipped {summary['skipped_records']}, "
        f"out of range {summary['out_of_range']}"
    )
    print(
        f"flashbots members {summary['flashbots_members']} "
        f"(unmatched manifest entries {summary['unmatched_manifest']})"
    )
    if summary.get("missing_status"):
        print(
            f"warning: success filtering unavailable for {summary['missing_status']} record(s)",
            file=sys.stderr,
        )
    if summary.get("block_range"):
        lo, hi = summary["block_range"]
        print(f"block range: {lo}..{hi}")
    return 0


def _cmd_analyze(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    window: dict = {}
    if args.preset is None:
        mode = {"day": "utc_day", "week": "utc_week", "blocks": "block_range"}[args.window]
        window["mode"] = mode
        if args.anchor:
            window["anchor"] = args.anchor
        if args.count:
            window["count"] = args.count
        if mode == "block_range":
            if not args.blocks:
                parser.error("--window blocks requires --blocks RANGES")
            try:
                window["block_ranges"] = _parse_block_ranges(args.blocks)
            except ValueError as exc:
                parser.error(str(exc))
        elif mode == "utc_week" and not args.anchor:
            parser.error("--window week requires --anchor DATE")

    pair = None
    if args.pair:
        try:
            pair = _parse_pair(args.pair)
        except ValueError as exc:
            parser.error(str(exc))

    body: dict = {
        "tx_files": args.txs,
        "flashbots_manifest": args.flashbots_manifest,
        "tags_file": args.tags,
        "seed_file": args.seed_accounts,
        "preset": args.preset,
        "view": args.view,
        "metric": "tx_count" if args.metric == "txcount" else args.metric,
        "direction": args.direction,
        "k": args.k,
        "bottom": args.bottom,
        "pair": pair,
        "min_block": args.min_block,
        "max_block": args.max_block,
        "require_success": args.require_success,
        "on_parse_error": "skip" if args.skip_bad_records else "raise",
        "first_day_new": args.first_day_new,
        "include_charts": not args.no_charts,
        "command": shlex.join(["ethergraph"] + (args.raw_argv or [])),
    }
    if window:
        body["window"] = window

    with make_client(args.server) as client:
        response = client.post("/analyses", json=body)
    if response.status_code != 200:
        return _fail(response)
    payload = response.json()

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "metadata.json").write_text(
        json.dumps(payload["metadata"], indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
        newline="",
    )
    for artifact in payload["artifacts"]:
        (out_dir / artifact["name"]).write_text(artifact["content"], encoding="utf-8", newline="")

    for table in payload["tables"]:
        print(table["caption"])
        print()
        print("| Address | Tag | Degree Growth |")
        print("| --- | --- | --- |")
        for row in table["rows"]:
            print(f"| {row['short_address']} | {row['label']} | {row['delta']} |")
        print()
    print(f"report bundle written to {out_dir} ({len(payload['artifacts']) + 1} files)")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    uvicorn.run("ethergraph.service:app", host=args.host, port=args.port)
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.raw_argv = argv
    try:
        if args.command == "ingest":
            return _cmd_ingest(args, parser)
        if args.command == "analyze":
            return _cmd_analyze(args, parser)
        return _cmd_serve(args)
    except httpx.HTTPError as exc:
        print(f"error: cannot reach service: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
