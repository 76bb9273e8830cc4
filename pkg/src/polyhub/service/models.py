"""Pydantic request/response models for the hub service."""

from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, Field


class QueryRequest(BaseModel):
    principal_id: str
    query: str


class KvEntryModel(BaseModel):
    row: str
    column: str
    visibility: str
    timestamp: int
    value: str


class ArrayDimModel(BaseModel):
    name: str
    length: int


class ArrayModel(BaseModel):
    name: str
    dims: list[ArrayDimModel]
    cells: list[float]


class QueryResponse(BaseModel):
    island: str
    kind: str  # "relation" | "entries" | "array"
    row_count: int
    columns: Optional[list[str]] = None
    column_types: Optional[list[str]] = None
    rows: Optional[list[list[Any]]] = None
    entries: Optional[list[KvEntryModel]] = None
    array: Optional[ArrayModel] = None


class ErrorResponse(BaseModel):
    error: str
    reason: str


class IngestRequest(BaseModel):
    source: str
    format: str
    island: str
    engine_id: str
    table: str
    drop_columns: list[str] = Field(default_factory=list)
    key_column: Optional[str] = None


class IngestResponse(BaseModel):
    rows_parsed: int
    rows_loaded: int
    columns_dropped: list[str]


class CrawlRequest(BaseModel):
    root: str


class SkippedFile(BaseModel):
    path: str
    reason: str


class CrawlResponse(BaseModel):
    scanned_count: int
    registered: list[str]
    skipped: list[SkippedFile]


class LocationModel(BaseModel):
    island: str
    engine_id: str
    object_name: str


class CatalogEntryModel(BaseModel):
    id: str
    name: str
    owner: str
    locations: list[LocationModel]
    metatags: list[str]
    checksum: str
    created_at: float
    updated_at: float
    stale: bool
    notes: str
    source_path: Optional[str] = None


class SearchResponse(BaseModel):
    entries: list[CatalogEntryModel]


class DuplicatesResponse(BaseModel):
    groups: list[list[str]]


class StaleRequest(BaseModel):
    days: float


class StaleResponse(BaseModel):
    flagged: int


class ExplainRequest(BaseModel):
    query: str


class ExplainResponse(BaseModel):
    plan: str


class HealthResponse(BaseModel):
    status: str
    engine_count: int
    island_count: int
    shim_count: int
    cast_codec_count: int


class ReloadResponse(BaseModel):
    status: str
