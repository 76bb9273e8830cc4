"""HTTP+JSON service wrapping a DataHub."""

from __future__ import annotations

import time
from contextlib import asynccontextmanager

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse

from ..catalog import DataUseAgreement, render_dua
from ..engines.base import IslandTag
from ..errors import AccessDenied, HubError, LimitExceeded
from ..hub.core import DataHub
from ..hub.ingest import ingest_spec_from_dict
from ..query.executor import ExecResult
from . import models


def build_app(hub: DataHub) -> FastAPI:
    """Assemble the service around one hub instance."""

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        hub.shutdown()  # in-flight requests have drained by now

    app = FastAPI(title="polyhub", lifespan=lifespan)
    app.state.hub = hub

    @app.exception_handler(HubError)
    async def hub_error_handler(request: Request, exc: HubError):
        if isinstance(exc, (AccessDenied, LimitExceeded)):
            status = 403
        else:
            status = 400
        body = models.ErrorResponse(error=type(exc).__name__, reason=str(exc))
        return JSONResponse(status_code=status, content=body.model_dump())

    @app.get("/health", response_model=models.HealthResponse)
    def health():
        stats = hub.stats()
        return models.HealthResponse(
            status="ok",
            engine_count=stats.engine_count,
            island_count=stats.island_count,
            shim_count=stats.shim_count,
            cast_codec_count=stats.cast_codec_count,
        )

    @app.post("/query", response_model=models.QueryResponse, responses={403: {"model": models.ErrorResponse}})
    def run_query(request: models.QueryRequest):
        result = hub.query(request.principal_id, request.query)
        return _query_response(result)

    @app.post("/explain", response_model=models.ExplainResponse)
    def explain(request: models.ExplainRequest):
        return models.ExplainResponse(plan=hub.explain(request.query))

    @app.post("/ingest", response_model=models.IngestResponse)
    def ingest(request: models.IngestRequest):
        spec = ingest_spec_from_dict(request.model_dump())
        report = hub.ingest(spec)
        return models.IngestResponse(
            rows_parsed=report.rows_parsed,
            rows_loaded=report.rows_loaded,
            columns_dropped=report.columns_dropped,
        )

    @app.post("/crawl", response_model=models.CrawlResponse)
    def crawl(request: models.CrawlRequest):
        report = hub.crawl(request.root)
        return models.CrawlResponse(
            scanned_count=report.scanned_count,
            registered=report.registered,
            skipped=[models.SkippedFile(path=p, reason=r) for p, r in report.skipped],
        )

    @app.get("/catalog/search", response_model=models.SearchResponse)
    def catalog_search(q: str = Query(default="")):
        entries = hub.catalog.search(q.split())
        return models.SearchResponse(entries=[_entry_model(e) for e in entries])

    @app.get("/catalog/duplicates", response_model=models.DuplicatesResponse)
    def catalog_duplicates():
        return models.DuplicatesResponse(groups=hub.catalog.detect_duplicates())

    @app.post("/catalog/stale", response_model=models.StaleResponse)
    def catalog_stale(request: models.StaleRequest):
        flagged = hub.catalog.mark_stale(time.time(), request.days * 86400.0)
        return models.StaleResponse(flagged=flagged)

    @app.get("/registry")
    def registry_dump():
        return hub.registry.dump()

    @app.post("/dua/render")
    def dua_render(doc: dict):
        agreement = DataUseAgreement(
            institution=doc.get("institution", ""),
            data_description=doc.get("data_description", ""),
            duration=doc.get("duration", ""),
            collection_date_range=doc.get("collection_date_range", ""),
            collection_location=doc.get("collection_location", ""),
            personnel=tuple(doc.get("personnel", [])),
            technical_controls=doc.get("technical_controls", ""),
            deanonymization_prohibited=doc.get("deanonymization_prohibited", True),
            publication_rule=doc.get("publication_rule", ""),
            retention_rule=doc.get("retention_rule", ""),
        )
        return {"document": render_dua(agreement)}

    @app.post("/policies/reload", response_model=models.ReloadResponse)
    def reload_policies():
        hub.reload_policies()
        return models.ReloadResponse(status="reloaded")

    return app


def _entry_model(entry) -> models.CatalogEntryModel:
    return models.CatalogEntryModel(
        id=entry.id,
        name=entry.name,
        owner=entry.owner,
        locations=[
            models.LocationModel(
                island=loc.island.value, engine_id=loc.engine_id, object_name=loc.object_name
            )
            for loc in entry.locations
        ],
        metatags=sorted(entry.metatags),
        checksum=entry.checksum,
        created_at=entry.created_at,
        updated_at=entry.updated_at,
        stale=entry.stale,
        notes=entry.notes,
        source_path=entry.source_path,
    )


def _query_response(result: ExecResult) -> models.QueryResponse:
    if result.island is IslandTag.REL:
        relation = result.value
        return models.QueryResponse(
            island=result.island.value,
            kind="relation",
            row_count=result.row_count,
            columns=list(relation.schema.column_names),
            column_types=[ctype for _, ctype in relation.schema.columns],
            rows=[list(row) for row in relation.rows],
        )
    if result.island is IslandTag.KV:
        return models.QueryResponse(
            island=result.island.value,
            kind="entries",
            row_count=result.row_count,
            entries=[
                models.KvEntryModel(
                    row=e.row,
                    column=e.column,
                    visibility=e.visibility,
                    timestamp=e.timestamp,
                    value=e.value,
                )
                for e in result.value
            ],
        )
    array = result.value
    return models.QueryResponse(
        island=result.island.value,
        kind="array",
        row_count=result.row_count,
        array=models.ArrayModel(
            name=array.name,
            dims=[models.ArrayDimModel(name=n, length=l) for n, l in array.dims],
            cells=list(array.cells),
        ),
    )
