"""polyhub: a desk-scale polystore data hub.

Three embedded storage engines (relational, key-value, dense array) sit
behind islands, shims and casts; a scope-tagged query language plans across
them using performance history; access control, a searchable catalog, and a
file ingestion pipeline round out the hub. A FastAPI service and a thin CLI
wrap the library.
"""

from .access import Decision, PolicyStore, Principal, QueryPolicy, ViewPolicy
from .catalog import Catalog, CrawlReport, DataUseAgreement, DatasetEntry, usable_capacity
from .engines import (
    ArrayEngine,
    DenseArray,
    EngineId,
    EngineKind,
    IslandTag,
    KeyValueEngine,
    KvEntry,
    Relation,
    RelationalEngine,
    Schema,
)
from .hub import DataHub, HubConfig, IngestSpec, load_config, scan_wordcount
from .islands import AssociativeTable, Registry, cast, classify_architecture
from .query import Monitor, parse, plan, render

__version__ = "0.1.0"

__all__ = [
    "Decision",
    "PolicyStore",
    "Principal",
    "QueryPolicy",
    "ViewPolicy",
    "Catalog",
    "CrawlReport",
    "DataUseAgreement",
    "DatasetEntry",
    "usable_capacity",
    "ArrayEngine",
    "DenseArray",
    "EngineId",
    "EngineKind",
    "IslandTag",
    "KeyValueEngine",
    "KvEntry",
    "Relation",
    "RelationalEngine",
    "Schema",
    "DataHub",
    "HubConfig",
    "IngestSpec",
    "load_config",
    "scan_wordcount",
    "AssociativeTable",
    "Registry",
    "cast",
    "classify_architecture",
    "Monitor",
    "parse",
    "plan",
    "render",
    "__version__",
]
