"""Exception hierarchy shared across the hub."""


class HubError(Exception):
    """Base class for every error raised by this package."""


class EngineError(HubError):
    """Native storage-engine failure: unknown table, schema violation, bad bounds."""


class TransactionError(EngineError):
    """A transaction was rolled back; carries the index of the failing statement."""

    def __init__(self, message: str, statement_index: int):
        super().__init__(f"statement {statement_index}: {message}")
        self.statement_index = statement_index


class VisibilityError(EngineError):
    """Malformed visibility expression."""


class SnapshotError(EngineError):
    """Missing or corrupt engine snapshot file."""


class RegistryError(HubError):
    """Island/engine registration failure (kind mismatch, duplicate binding)."""


class CastError(HubError):
    """Value cannot be moved through the associative interchange form."""


class QueryError(HubError):
    """Base for query-processing failures (parse, plan, execute)."""


class ParseError(QueryError):
    """Lexical or syntactic error; carries a 1-indexed character position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message}, at position {position}")
        self.position = position


class PlanError(QueryError):
    """Query cannot be planned against the current registry/catalog."""


class AccessDenied(HubError):
    """Authorization failure; the reason is always populated."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class LimitExceeded(HubError):
    """Result materialization crossed the effective row limit. Distinct from
    engine errors so callers can tell an oversized result from a broken query."""

    def __init__(self, limit: int):
        super().__init__(f"result exceeds the configured limit of {limit} rows")
        self.limit = limit


class CatalogError(HubError):
    """Catalog registration/persistence failure."""


class CrawlError(CatalogError):
    """Discovery crawl could not run at all (unreadable root)."""


class DuaError(CatalogError):
    """Data-use agreement is missing a required field."""


class IngestError(HubError):
    """Ingestion failure; nothing was loaded."""


class ConfigError(HubError):
    """Invalid hub configuration."""
