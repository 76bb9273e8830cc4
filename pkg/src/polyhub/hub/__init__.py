"""Hub assembly: configuration, ingestion, and the DataHub facade."""

from .config import DEFAULT_ENGINES, HubConfig, load_config
from .core import DataHub, scan_wordcount
from .ingest import IngestReport, IngestSpec, ingest_spec_from_dict, load_ingest_spec

__all__ = [
    "DEFAULT_ENGINES",
    "HubConfig",
    "load_config",
    "DataHub",
    "scan_wordcount",
    "IngestReport",
    "IngestSpec",
    "ingest_spec_from_dict",
    "load_ingest_spec",
]
