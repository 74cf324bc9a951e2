"""HTTP service wrapping the analytics core.

Datasets are expensive to parse, so the service keeps loaded datasets in
memory behind ids and answers repeated analysis queries (different week
pairs, views, metrics) without re-reading the dumps. One-shot endpoints
exist for batch clients: ``POST /analyses`` streams files straight through
an analysis, and ``POST /ingest`` normalizes dumps or fetches them from the
configured endpoints. File paths in requests are resolved on the service
host; the bundled CLI runs the app in-process, so paths behave locally.
"""

from __future__ import annotations

import threading
from datetime import date
from pathlib import Path
from typing import Literal

from fastapi import FastAPI, HTTPException, Response
from pydantic import BaseModel, Field

from . import __version__
from .analytics import TagMap, load_tag_map, bundled_tags_path
from .dataset import Dataset, FlashbotsManifest, load_dataset
from .fetch import AuthenticationError, EndpointConfig, FetchInterrupted, fetch_flashbots_blocks, fetch_transactions
from .model import normalize_address
from .pipeline import (
    AnalysisOptions,
    AnalysisResult,
    PRESETS,
    build_bundle,
    file_digest,
    run_analysis_from_dataset,
    run_analysis_from_files,
)
from .records import ParseError, read_seed_accounts, write_flashbots_manifest, write_transactions_ndjson
from .temporal import WindowSpec


class WindowParams(BaseModel):
    mode: Literal["utc_day", "utc_week", "block_range"] = "utc_week"
    anchor: date | None = None
    count: int | None = Field(default=None, ge=1)
    block_ranges: list[tuple[int, int]] | None = None

    def to_spec(self) -> WindowSpec:
        return WindowSpec(
            mode=self.mode,
            anchor=self.anchor,
            count=self.count,
            block_ranges=tuple(self.block_ranges) if self.block_ranges else None,
        )


class DatasetParams(BaseModel):
    tx_files: list[str] = Field(min_length=1)
    flashbots_manifest: str | None = None
    min_block: int | None = None
    max_block: int | None = None
    require_success: bool = False
    on_parse_error: Literal["raise", "skip"] = "raise"
    descriptor: str | None = None


class DatasetInfo(BaseModel):
    id: str
    descriptor: str
    transactions: int
    flashbots_members: int
    block_range: tuple[int, int] | None
    duplicates_dropped: int
    skipped_records: int
    unmatched_manifest: int


class AnalysisParams(BaseModel):
    window: WindowParams = WindowParams()
    preset: str | None = None
    view: Literal["full", "flashbots"] = "full"
    metric: Literal["distinct", "tx_count"] = "distinct"
    direction: Literal["in", "out", "total"] = "total"
    k: int = Field(default=10, ge=1)
    bottom: bool = False
    pair: tuple[int, int] | None = None
    seed_file: str | None = None
    seed_accounts: list[str] | None = None
    tags_file: str | None = None
    first_day_new: Literal["all", "excluding-seed"] = "all"
    include_charts: bool = True
    command: str | None = None  # recorded verbatim in run metadata


class OneShotAnalysisRequest(AnalysisParams):
    tx_files: list[str] = Field(min_length=1)
    flashbots_manifest: str | None = None
    min_block: int | None = None
    max_block: int | None = None
    require_success: bool = False
    on_parse_error: Literal["raise", "skip"] = "raise"


class RankedRow(BaseModel):
    address: str
    short_address: str
    label: str
    delta: int
    degree_prev: int
    degree_next: int


class GrowthTable(BaseModel):
    pair: tuple[int, int]
    caption: str
    rows: list[RankedRow]


class ArtifactPayload(BaseModel):
    name: str
    kind: str
    content: str


class AnalysisResponse(BaseModel):
    metadata: dict
    tables: list[GrowthTable]
    artifacts: list[ArtifactPayload]


class EndpointParams(BaseModel):
    config_file: str
    start_block: int
    end_block: int


class IngestRequest(BaseModel):
    tx_files: list[str] | None = None
    endpoint: EndpointParams | None = None
    fetch_flashbots: bool = False
    flashbots_manifest: str | None = None
    out_dir: str
    resume: bool = False
    min_block: int | None = None
    max_block: int | None = None
    require_success: bool = False
    on_parse_error: Literal["raise", "skip"] = "raise"


class IngestResponse(BaseModel):
    dataset_file: str
    manifest_file: str | None
    records_read: int
    records_written: int
    flashbots_members: int
    duplicates_dropped: int
    skipped_records: int
    out_of_range: int
    failed_dropped: int
    missing_status: int
    unmatched_manifest: int
    block_range: tuple[int, int] | None
    checkpoints: list[str]


class HealthResponse(BaseModel):
    status: str
    version: str


def _bad_request(exc: Exception) -> HTTPException:
    return HTTPException(status_code=400, detail=str(exc))


def _resolve_options(params: AnalysisParams) -> tuple[AnalysisOptions, int | None, int | None]:
    """Turn request parameters into runner options plus any preset block filter."""
    min_block = max_block = None
    if params.preset is not None:
        preset = PRESETS.get(params.preset)
        if preset is None:
            raise ValueError(f"unknown preset {params.preset!r}; available: {sorted(PRESETS)}")
        window = preset.window
        min_block, max_block = preset.min_block, preset.max_block
    else:
        window = params.window.to_spec()

    seed: set[str] = set()
    if params.seed_file:
        seed |= read_seed_accounts(params.seed_file)
    if params.seed_accounts:
        seed |= {normalize_address(a) for a in params.seed_accounts}

    tags: TagMap | None = None
    if params.tags_file:
        path = bundled_tags_path() if params.tags_file == "builtin" else params.tags_file
        tags = load_tag_map(path)

    options = AnalysisOptions(
        window=window,
        view=params.view,
        metric=params.metric,
        direction=params.direction,
        k=params.k,
        bottom=params.bottom,
        pair=params.pair,
        seed=frozenset(seed),
        tags=tags,
        first_day_excludes_seed=params.first_day_new == "excluding-seed",
        charts=params.include_charts,
    )
    return options, min_block, max_block


def _analysis_response(result: AnalysisResult, run_info: dict) -> AnalysisResponse:
    bundle = build_bundle(result, run_info)
    tables = [
        GrowthTable(
            pair=r.pair,
            caption=r.caption,
            rows=[
                RankedRow(
                    address=row.address,
                    short_address=row.short_address,
                    label=row.label,
                    delta=row.delta,
                    degree_prev=row.degree_prev,
                    degree_next=row.degree_next,
                )
                for row in r.rows
            ],
        )
        for r in result.rankings
    ]
    artifacts = [ArtifactPayload(name=a.name, kind=a.kind, content=a.content) for a in bundle.artifacts]
    return AnalysisResponse(metadata=bundle.metadata, tables=tables, artifacts=artifacts)


def _input_digests(paths: list[str]) -> list[dict[str, str]]:
    return [{"path": p, "sha256": file_digest(p)} for p in paths]


def create_app() -> FastAPI:
    app = FastAPI(
        title="ethergraph",
        version=__version__,
        description="Temporal graph analytics over Ethereum-style transaction dumps",
    )
    datasets: dict[str, Dataset] = {}
    lock = threading.Lock()
    counter = {"next": 1}

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/datasets", response_model=DatasetInfo, status_code=201)
    def register_dataset(request: DatasetParams) -> DatasetInfo:
        try:
            manifest = (
                FlashbotsManifest.load(request.flashbots_manifest, request.on_parse_error)
                if request.flashbots_manifest
                else None
            )
            ds = load_dataset(
                request.tx_files,
                manifest,
                min_block=request.min_block,
                max_block=request.max_block,
                require_success=request.require_success,
                on_error=request.on_parse_error,
                descriptor=request.descriptor,
            )
        except (ParseError, ValueError, OSError) as exc:
            raise _bad_request(exc)
        with lock:
            dataset_id = f"d{counter['next']}"
            counter["next"] += 1
            datasets[dataset_id] = ds
        return _dataset_info(dataset_id, ds)

    def _dataset_info(dataset_id: str, ds: Dataset) -> DatasetInfo:
        return DatasetInfo(
            id=dataset_id,
            descriptor=ds.source_descriptor,
            transactions=len(ds),
            flashbots_members=ds.stats.flashbots_members,
            block_range=ds.block_range,
            duplicates_dropped=ds.stats.duplicates_dropped,
            skipped_records=ds.stats.skipped_records,
            unmatched_manifest=ds.stats.unmatched_manifest,
        )

    @app.get("/datasets", response_model=list[DatasetInfo])
    def list_datasets() -> list[DatasetInfo]:
        with lock:
            return [_dataset_info(k, v) for k, v in sorted(datasets.items())]

    @app.get("/datasets/{dataset_id}", response_model=DatasetInfo)
    def get_dataset(dataset_id: str) -> DatasetInfo:
        ds = datasets.get(dataset_id)
        if ds is None:
            raise HTTPException(status_code=404, detail=f"no dataset {dataset_id!r}")
        return _dataset_info(dataset_id, ds)

    @app.delete("/datasets/{dataset_id}", status_code=204)
    def delete_dataset(dataset_id: str) -> Response:
        with lock:
            if datasets.pop(dataset_id, None) is None:
                raise HTTPException(status_code=404, detail=f"no dataset {dataset_id!r}")
        return Response(status_code=204)

    @app.post("/datasets/{dataset_id}/analyses", response_model=AnalysisResponse)
    def analyze_dataset(dataset_id: str, request: AnalysisParams) -> AnalysisResponse:
        ds = datasets.get(dataset_id)
        if ds is None:
            raise HTTPException(status_code=404, detail=f"no dataset {dataset_id!r}")
        try:
            options, _, _ = _resolve_options(request)
            result = run_analysis_from_dataset(ds, options)
        except (ParseError, ValueError, OSError) as exc:
            raise _bad_request(exc)
        run_info: dict = {"dataset_id": dataset_id, "descriptor": ds.source_descriptor}
        if request.command:
            run_info["command"] = request.command
        return _analysis_response(result, run_info)

    @app.post("/analyses", response_model=AnalysisResponse)
    def analyze_files(request: OneShotAnalysisRequest) -> AnalysisResponse:
        try:
            options, preset_min, preset_max = _resolve_options(request)
            min_block = request.min_block if request.min_block is not None else preset_min
            max_block = request.max_block if request.max_block is not None else preset_max
            result = run_analysis_from_files(
                request.tx_files,
                options,
                manifest_file=request.flashbots_manifest,
                min_block=min_block,
                max_block=max_block,
                require_success=request.require_success,
                on_error=request.on_parse_error,
            )
            inputs = _input_digests(
                request.tx_files
                + ([request.flashbots_manifest] if request.flashbots_manifest else [])
            )
        except (ParseError, ValueError, OSError) as exc:
            raise _bad_request(exc)
        run_info = {
            "inputs": inputs,
            "filters": {
                "min_block": min_block,
                "max_block": max_block,
                "require_success": request.require_success,
            },
        }
        if request.preset:
            run_info["preset"] = request.preset
        if request.command:
            run_info["command"] = request.command
        return _analysis_response(result, run_info)

    @app.post("/ingest", response_model=IngestResponse)
    def ingest(request: IngestRequest) -> IngestResponse:
        if bool(request.tx_files) == bool(request.endpoint):
            raise HTTPException(
                status_code=400, detail="exactly one of tx_files or endpoint must be given"
            )
        out_dir = Path(request.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        checkpoints: list[str] = []
        manifest_file: str | None = None
        try:
            if request.endpoint is not None:
                config = EndpointConfig.from_file(request.endpoint.config_file)
                manifest = None
                if request.fetch_flashbots:
                    fb_checkpoint = out_dir / "checkpoint_flashbots.json"
                    pairs = list(
                        fetch_flashbots_blocks(
                            config,
                            request.endpoint.start_block,
                            request.endpoint.end_block,
                            checkpoint_path=fb_checkpoint,
                            resume=request.resume,
                        )
                    )
                    manifest_file = str(out_dir / "flashbots_manifest.ndjson")
                    write_flashbots_manifest(pairs, manifest_file)
                    manifest = FlashbotsManifest.from_pairs(pairs)
                    checkpoints.append(str(fb_checkpoint))
                elif request.flashbots_manifest:
                    manifest = FlashbotsManifest.load(
                        request.flashbots_manifest, request.on_parse_error
                    )
                tx_checkpoint = out_dir / "checkpoint_txs.json"
                stream = fetch_transactions(
                    config,
                    request.endpoint.start_block,
                    request.endpoint.end_block,
                    checkpoint_path=tx_checkpoint,
                    resume=request.resume,
                )
                checkpoints.append(str(tx_checkpoint))
                ds = load_dataset(
                    stream,
                    manifest,
                    min_block=request.min_block,
                    max_block=request.max_block,
                    require_success=request.require_success,
                    descriptor=f"fetched blocks {request.endpoint.start_block}-{request.endpoint.end_block}",
                )
            else:
                manifest = (
                    FlashbotsManifest.load(request.flashbots_manifest, request.on_parse_error)
                    if request.flashbots_manifest
                    else None
                )
                ds = load_dataset(
                    request.tx_files,
                    manifest,
                    min_block=request.min_block,
                    max_block=request.max_block,
                    require_success=request.require_success,
                    on_error=request.on_parse_error,
                )
                manifest_file = request.flashbots_manifest
            dataset_file = out_dir / "dataset.ndjson"
            written = write_transactions_ndjson(ds.transactions, dataset_file)
        except AuthenticationError as exc:
            raise HTTPException(status_code=502, detail=f"authentication failed: {exc}")
        except FetchInterrupted as exc:
            raise HTTPException(
                status_code=503,
                detail=f"fetch interrupted ({exc}); rerun with resume to continue",
            )
        except (ParseError, ValueError, OSError) as exc:
            raise _bad_request(exc)
        return IngestResponse(
            dataset_file=str(dataset_file),
            manifest_file=manifest_file,
            records_read=ds.stats.records_read,
            records_written=written,
            flashbots_members=ds.stats.flashbots_members,
            duplicates_dropped=ds.stats.duplicates_dropped,
            skipped_records=ds.stats.skipped_records,
            out_of_range=ds.stats.out_of_range,
            failed_dropped=ds.stats.failed_dropped,
            missing_status=ds.stats.missing_status,
            unmatched_manifest=ds.stats.unmatched_manifest,
            block_range=ds.block_range,
            checkpoints=checkpoints,
        )

    return app


app = create_app()
