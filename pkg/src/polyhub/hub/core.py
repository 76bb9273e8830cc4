"""The assembled data hub: engines, islands, catalog, policies and monitor
behind one object, plus the scan-path word-count analytic."""

from __future__ import annotations

import collections
import threading
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from .. import access
from ..catalog import Catalog, CrawlReport, crawl
from ..engines.array import ArrayEngine
from ..engines.base import ISLAND_FOR_KIND, EngineKind
from ..engines.keyvalue import KeyValueEngine
from ..engines.relational import RelationalEngine
from ..engines.snapshot import checkpoint, restore
from ..errors import AccessDenied, ConfigError, HubError
from ..islands import Registry, RegistryStats
from ..query.executor import ExecResult, execute
from ..query.monitor import Monitor, query_signature
from ..query.parser import parse
from ..query.planner import explain as explain_plan
from ..query.planner import plan
from .config import DEFAULT_ENGINES, HubConfig
from .ingest import IngestReport, IngestSpec, ingest

_ENGINE_CLASSES = {
    EngineKind.RELATIONAL: RelationalEngine,
    EngineKind.KEYVALUE: KeyValueEngine,
    EngineKind.ARRAY: ArrayEngine,
}


class DataHub:
    """One hub instance: a registry of engines plus catalog, policies and
    query machinery. Safe to share across concurrent service requests."""

    def __init__(
        self,
        *,
        registry: Registry,
        catalog: Catalog,
        policy_store: access.PolicyStore,
        monitor: Monitor,
        config: Optional[HubConfig] = None,
    ):
        self.registry = registry
        self.catalog = catalog
        self.policy_store = policy_store
        self.monitor = monitor
        self.config = config
        self._mutate_lock = threading.Lock()

    # -- construction ------------------------------------------------------

    @classmethod
    def in_memory(
        cls,
        policy_store: Optional[access.PolicyStore] = None,
        engines: Sequence[tuple[str, EngineKind]] = DEFAULT_ENGINES,
        monitor_window: int = 20,
    ) -> "DataHub":
        """A fresh hub with empty engines; handy for tests and embedding."""
        registry = Registry()
        for engine_id, kind in engines:
            engine = _ENGINE_CLASSES[kind](engine_id)
            registry.register_engine(ISLAND_FOR_KIND[kind], engine)
        return cls(
            registry=registry,
            catalog=Catalog(),
            policy_store=policy_store or access.PolicyStore(),
            monitor=Monitor(monitor_window),
        )

    @classmethod
    def from_config(cls, config: HubConfig) -> "DataHub":
        """Build a hub from configuration, restoring any engine snapshots
        found in the data directory."""
        config.data_dir.mkdir(parents=True, exist_ok=True)
        registry = Registry()
        for engine_id, kind in config.engines:
            snapshot_path = config.data_dir / f"{engine_id}.phub"
            if snapshot_path.exists():
                engine = restore(snapshot_path)
                if engine.engine_id.id != engine_id or engine.kind is not kind:
                    raise ConfigError(
                        f"snapshot {snapshot_path} holds engine "
                        f"{engine.engine_id.id!r}/{engine.kind.value}, expected "
                        f"{engine_id!r}/{kind.value}"
                    )
            else:
                engine = _ENGINE_CLASSES[kind](engine_id)
            registry.register_engine(ISLAND_FOR_KIND[kind], engine)
        policy_store = access.PolicyStore.from_file(config.policy_file)
        if config.catalog_file.exists():
            catalog = Catalog.load(config.catalog_file)
        else:
            catalog = Catalog(config.catalog_file)
        return cls(
            registry=registry,
            catalog=catalog,
            policy_store=policy_store,
            monitor=Monitor(config.monitor_window),
            config=config,
        )

    # -- queries -----------------------------------------------------------

    def query(self, principal_id: str, text: str) -> ExecResult:
        """Parse, authorize, plan and execute one query.

        Denied queries raise AccessDenied before any plan step runs, so they
        leave no monitor records.
        """
        principal = self.policy_store.principal(principal_id)
        ast = parse(text)
        decision = access.check_query(principal, ast, self.policy_store)
        if not decision.allowed:
            raise AccessDenied(decision.reason)
        merged = access.effective_query_policy(principal, self.policy_store)
        query_plan = plan(ast, self.registry, self.catalog, self.monitor)
        return execute(
            query_plan,
            principal,
            self.policy_store,
            self.registry,
            self.monitor,
            signature=query_signature(text),
            max_rows=None if merged is None else merged.max_result_rows,
        )

    def explain(self, text: str) -> str:
        ast = parse(text)
        query_plan = plan(ast, self.registry, self.catalog, self.monitor)
        return explain_plan(query_plan)

    # -- ingestion and discovery ---------------------------------------------

    def ingest(self, spec: IngestSpec) -> IngestReport:
        with self._mutate_lock:
            return ingest(spec, self.registry, self.catalog)

    def crawl(self, root: Union[str, Path]) -> CrawlReport:
        with self._mutate_lock:
            return crawl(self.catalog, root)

    # -- administration -------------------------------------------------------

    def stats(self) -> RegistryStats:
        return self.registry.stats()

    def reload_policies(self) -> None:
        if self.config is None:
            raise ConfigError("hub has no policy file configured")
        self.policy_store.reload(self.config.policy_file)

    def checkpoint_all(self) -> list[Path]:
        """Snapshot every engine into the data directory and save the catalog."""
        if self.config is None:
            raise ConfigError("hub has no data directory configured")
        written = []
        for engine in self.registry.engines():
            path = self.config.data_dir / f"{engine.engine_id.id}.phub"
            checkpoint(engine, path)
            written.append(path)
        if self.catalog.path is not None:
            written.append(self.catalog.save())
        return written

    def shutdown(self) -> None:
        if self.config is not None and self.config.snapshot_on_shutdown:
            self.checkpoint_all()


def scan_wordcount(paths: Iterable[Union[str, Path]]) -> dict[str, int]:
    """Whitespace-tokenized, case-folded word counts summed across files.

    The scan-path counterpart to loading data into an engine first: read the
    parsed files straight off the filesystem.
    """
    counts: collections.Counter[str] = collections.Counter()
    for path in paths:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise HubError(f"cannot read {path}: {exc}") from exc
        counts.update(word.casefold() for word in text.split())
    return dict(counts)
