"""Data catalog: registration, metatag search, duplicate and staleness
detection, a filesystem discovery crawler, data-use agreements, and the
storage capacity planner."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import threading
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Union

from .engines.base import IslandTag
from .errors import CatalogError, CrawlError, DuaError

CRAWL_EXTENSIONS = {".csv": "csv", ".jsonl": "jsonl"}
JSONL_TAG_SAMPLE = 100  # records inspected when inferring crawl metatags


@dataclass(frozen=True)
class Location:
    island: IslandTag
    engine_id: str
    object_name: str


@dataclass
class DatasetEntry:
    id: str
    name: str
    owner: str = ""
    locations: list[Location] = field(default_factory=list)
    metatags: set[str] = field(default_factory=set)
    checksum: str = ""
    created_at: float = 0.0
    updated_at: float = 0.0
    stale: bool = False
    notes: str = ""
    source_path: Optional[str] = None

    def __post_init__(self):
        if not self.id:
            raise CatalogError("dataset entry needs an id")
        if not self.locations and self.source_path is None:
            raise CatalogError(f"entry {self.id!r} needs a location or a source path")
        if self.updated_at < self.created_at:
            raise CatalogError(f"entry {self.id!r} updated before it was created")


@dataclass(frozen=True)
class DataUseAgreement:
    institution: str
    data_description: str
    duration: str
    collection_date_range: str = ""
    collection_location: str = ""
    personnel: tuple[str, ...] = ()
    technical_controls: str = ""
    deanonymization_prohibited: bool = True
    publication_rule: str = ""
    retention_rule: str = ""


@dataclass
class CrawlReport:
    scanned_count: int
    registered: list[str]
    skipped: list[tuple[str, str]]


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class Catalog:
    """Dataset entries plus recorded data-use agreements.

    Mutations are serialized; searches read a consistent snapshot. The whole
    catalog persists as one JSON file.
    """

    def __init__(self, path: Optional[Union[str, Path]] = None):
        self.path = Path(path) if path is not None else None
        self._entries: dict[str, DatasetEntry] = {}
        self._agreements: list[DataUseAgreement] = []
        self._lock = threading.Lock()

    # -- registration and lookup -----------------------------------------

    def register(self, entry: DatasetEntry) -> str:
        with self._lock:
            if entry.id in self._entries:
                raise CatalogError(f"dataset id {entry.id!r} is already registered")
            self._entries[entry.id] = entry
            return entry.id

    def entry(self, entry_id: str) -> DatasetEntry:
        with self._lock:
            if entry_id not in self._entries:
                raise CatalogError(f"unknown dataset {entry_id!r}")
            return self._entries[entry_id]

    def entries(self) -> list[DatasetEntry]:
        with self._lock:
            return list(self._entries.values())

    def has_checksum(self, checksum: str) -> bool:
        with self._lock:
            return any(e.checksum == checksum for e in self._entries.values() if checksum)

    def locations_for(self, island: IslandTag, object_name: str) -> list[Location]:
        """Every engine location holding ``object_name`` on ``island``."""
        island = IslandTag(island)
        out = []
        with self._lock:
            for entry in self._entries.values():
                for loc in entry.locations:
                    if loc.island is island and loc.object_name == object_name:
                        out.append(loc)
        return out

    def add_agreement(self, agreement: DataUseAgreement) -> None:
        with self._lock:
            self._agreements.append(agreement)

    def agreements(self) -> list[DataUseAgreement]:
        with self._lock:
            return list(self._agreements)

    # -- search, duplicates, staleness -------------------------------------

    def search(self, keywords: Iterable[str]) -> list[DatasetEntry]:
        """Rank by matched-keyword count, then recency, then id. An empty
        keyword list returns everything, newest first."""
        keywords = [k.casefold() for k in keywords]
        snapshot = self.entries()
        if not keywords:
            return sorted(snapshot, key=lambda e: (-e.updated_at, e.id))
        scored = []
        for entry in snapshot:
            haystack = {t.casefold() for t in entry.metatags} | {entry.name.casefold()}
            score = sum(1 for k in keywords if k in haystack)
            if score > 0:
                scored.append((score, entry))
        scored.sort(key=lambda pair: (-pair[0], -pair[1].updated_at, pair[1].id))
        return [entry for _, entry in scored]

    def detect_duplicates(self) -> list[list[str]]:
        """Groups (size >= 2) of entry ids sharing a content checksum."""
        by_checksum: dict[str, list[str]] = {}
        for entry in self.entries():
            if entry.checksum:
                by_checksum.setdefault(entry.checksum, []).append(entry.id)
        groups = [sorted(ids) for ids in by_checksum.values() if len(ids) >= 2]
        groups.sort()
        return groups

    def mark_stale(self, now: float, threshold_seconds: float) -> int:
        """Flag entries not updated for strictly longer than the threshold;
        every other entry is unflagged. Returns how many are stale."""
        if threshold_seconds <= 0:
            raise CatalogError("staleness threshold must be positive")
        flagged = 0
        with self._lock:
            # swap in replacement entries so concurrent searches keep reading
            # a consistent snapshot
            updated = {}
            for eid, entry in self._entries.items():
                is_stale = (now - entry.updated_at) > threshold_seconds
                updated[eid] = replace(entry, stale=is_stale) if entry.stale != is_stale else entry
                flagged += int(is_stale)
            self._entries = updated
        return flagged

    # -- persistence --------------------------------------------------------

    def save(self, path: Optional[Union[str, Path]] = None) -> Path:
        path = Path(path) if path is not None else self.path
        if path is None:
            raise CatalogError("catalog has no file path")
        with self._lock:
            doc = {
                "entries": [_entry_to_json(e) for e in self._entries.values()],
                "agreements": [_agreement_to_json(a) for a in self._agreements],
            }
        path.write_text(json.dumps(doc, indent=2, sort_keys=True), encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Catalog":
        path = Path(path)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise CatalogError(f"cannot read catalog file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise CatalogError(f"catalog file {path} is not valid JSON: {exc}") from exc
        catalog = cls(path)
        try:
            for e in doc.get("entries", []):
                catalog.register(_entry_from_json(e))
            for a in doc.get("agreements", []):
                catalog.add_agreement(_agreement_from_json(a))
        except (KeyError, TypeError, ValueError) as exc:
            raise CatalogError(f"catalog file {path} is malformed: {exc}") from exc
        return catalog


def _entry_to_json(entry: DatasetEntry) -> dict:
    return {
        "id": entry.id,
        "name": entry.name,
        "owner": entry.owner,
        "locations": [
            {"island": loc.island.value, "engine_id": loc.engine_id, "object_name": loc.object_name}
            for loc in entry.locations
        ],
        "metatags": sorted(entry.metatags),
        "checksum": entry.checksum,
        "created_at": entry.created_at,
        "updated_at": entry.updated_at,
        "stale": entry.stale,
        "notes": entry.notes,
        "source_path": entry.source_path,
    }


def _entry_from_json(doc: dict) -> DatasetEntry:
    return DatasetEntry(
        id=doc["id"],
        name=doc["name"],
        owner=doc.get("owner", ""),
        locations=[
            Location(IslandTag(l["island"]), l["engine_id"], l["object_name"])
            for l in doc.get("locations", [])
        ],
        metatags=set(doc.get("metatags", [])),
        checksum=doc.get("checksum", ""),
        created_at=doc.get("created_at", 0.0),
        updated_at=doc.get("updated_at", 0.0),
        stale=doc.get("stale", False),
        notes=doc.get("notes", ""),
        source_path=doc.get("source_path"),
    )


def _agreement_to_json(a: DataUseAgreement) -> dict:
    return {
        "institution": a.institution,
        "data_description": a.data_description,
        "duration": a.duration,
        "collection_date_range": a.collection_date_range,
        "collection_location": a.collection_location,
        "personnel": list(a.personnel),
        "technical_controls": a.technical_controls,
        "deanonymization_prohibited": a.deanonymization_prohibited,
        "publication_rule": a.publication_rule,
        "retention_rule": a.retention_rule,
    }


def _agreement_from_json(doc: dict) -> DataUseAgreement:
    return DataUseAgreement(
        institution=doc["institution"],
        data_description=doc["data_description"],
        duration=doc["duration"],
        collection_date_range=doc.get("collection_date_range", ""),
        collection_location=doc.get("collection_location", ""),
        personnel=tuple(doc.get("personnel", [])),
        technical_controls=doc.get("technical_controls", ""),
        deanonymization_prohibited=doc.get("deanonymization_prohibited", True),
        publication_rule=doc.get("publication_rule", ""),
        retention_rule=doc.get("retention_rule", ""),
    )


# -- discovery crawler ----------------------------------------------------------


def crawl(catalog: Catalog, root: Union[str, Path]) -> CrawlReport:
    """Walk a directory tree and register every data file not already known.

    Recognizes ``.csv`` and ``.jsonl`` files; metatags come from the format
    plus inferred column names. Files whose checksum is already cataloged
    are skipped, which makes crawling an unchanged tree a no-op.
    """
    root = Path(root)
    if not root.is_dir():
        raise CrawlError(f"crawl root {root} is not a readable directory")
    scanned = 0
    registered: list[str] = []
    skipped: list[tuple[str, str]] = []
    now = time.time()
    for path in sorted(p for p in root.rglob("*") if p.suffix in CRAWL_EXTENSIONS and p.is_file()):
        scanned += 1
        try:
            data = path.read_bytes()
        except OSError as exc:
            skipped.append((str(path), f"unreadable: {exc}"))
            continue
        checksum = sha256_hex(data)
        if catalog.has_checksum(checksum):
            skipped.append((str(path), "duplicate of a cataloged dataset"))
            continue
        fmt = CRAWL_EXTENSIONS[path.suffix]
        try:
            columns = _infer_columns(data, fmt)
        except ValueError as exc:
            skipped.append((str(path), f"cannot infer metatags: {exc}"))
            continue
        entry = DatasetEntry(
            id=f"ds-{checksum[:12]}",
            name=path.stem,
            owner="",
            locations=[],
            metatags={fmt} | columns,
            checksum=checksum,
            created_at=now,
            updated_at=now,
            notes=f"discovered by crawler under {root}",
            source_path=str(path),
        )
        catalog.register(entry)
        registered.append(entry.id)
    return CrawlReport(scanned_count=scanned, registered=registered, skipped=skipped)


def _infer_columns(data: bytes, fmt: str) -> set[str]:
    text = data.decode("utf-8", errors="replace")
    if fmt == "csv":
        reader = csv.reader(io.StringIO(text))
        try:
            header = next(reader)
        except StopIteration:
            return set()
        return {h for h in header if h}
    columns: set[str] = set()
    for i, line in enumerate(text.splitlines()):
        if i >= JSONL_TAG_SAMPLE:
            break
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"line {i + 1}: {exc}") from exc
        if isinstance(record, dict):
            columns.update(record.keys())
        else:
            raise ValueError(f"line {i + 1}: not an object")
    return columns


# -- data-use agreements -----------------------------------------------------------


DUA_SECTION_HEADERS = (
    "What is the data you're seeking to share?",
    "Where / to whom is the data going?",
    "What controls are there on further release (policy/legal & technical)?",
)


def render_dua(agreement: DataUseAgreement) -> str:
    """Render an agreement as the three-section release-request document."""
    for field_name in ("institution", "data_description", "duration"):
        if not getattr(agreement, field_name):
            raise DuaError(f"{field_name} required")
    date_range = agreement.collection_date_range or "an unspecified date range"
    location = agreement.collection_location or "an unspecified location"
    personnel = ", ".join(agreement.personnel) if agreement.personnel else "named project personnel"
    deanon = (
        "De-anonymization attempts are prohibited by agreement."
        if agreement.deanonymization_prohibited
        else "No de-anonymization prohibition has been agreed."
    )
    publication = agreement.publication_rule or "No publication rule has been agreed."
    retention = agreement.retention_rule or "No retention rule has been agreed."
    controls = agreement.technical_controls or "standard institutional controls"
    lines = [
        DUA_SECTION_HEADERS[0],
        "",
        f"{agreement.data_description} The data was collected on {date_range} at {location}.",
        "",
        DUA_SECTION_HEADERS[1],
        "",
        f"The data will be shared with {agreement.institution} for a duration of "
        f"{agreement.duration}. Access is limited to {personnel}, working on "
        f"{agreement.institution} systems.",
        "",
        DUA_SECTION_HEADERS[2],
        "",
        f"Technical controls on the receiving systems: {controls}.",
        deanon,
        f"Publication: {publication}",
        f"Retention: {retention}",
        "",
    ]
    return "\n".join(lines)


# -- capacity planner ------------------------------------------------------------


def usable_capacity(raw_bytes: int, redundancy_overhead: float) -> int:
    """Bytes left for user data after the redundancy penalty, rounded down."""
    if raw_bytes < 0:
        raise ValueError("raw capacity must be nonnegative")
    if not 0.0 <= redundancy_overhead < 1.0:
        raise ValueError("redundancy overhead must lie in [0, 1)")
    return int(math.floor(raw_bytes * (1.0 - redundancy_overhead)))
