"""Hub configuration: plain-text ``key = value`` files."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Union

from ..engines.base import EngineKind
from ..errors import ConfigError

DEFAULT_ENGINES = (
    ("rel0", EngineKind.RELATIONAL),
    ("kv0", EngineKind.KEYVALUE),
    ("arr0", EngineKind.ARRAY),
)


@dataclass
class HubConfig:
    data_dir: Path
    policy_file: Path
    catalog_file: Path
    snapshot_on_shutdown: bool = True
    monitor_window: int = 20
    host: str = "127.0.0.1"
    port: int = 8080
    engines: tuple[tuple[str, EngineKind], ...] = DEFAULT_ENGINES

    def __post_init__(self):
        if self.monitor_window < 1:
            raise ConfigError("monitor_window must be at least 1")
        if not 1 <= self.port <= 65535:
            raise ConfigError(f"port {self.port} is out of range")
        ids = [eid for eid, _ in self.engines]
        if len(set(ids)) != len(ids):
            raise ConfigError(f"duplicate engine ids in config: {ids}")


_BOOL_WORDS = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def load_config(path: Union[str, Path]) -> HubConfig:
    """Read a config file; relative paths resolve against the file's directory."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        values[key] = value.strip()

    base = path.parent

    def path_of(key: str) -> Path:
        if key not in values:
            raise ConfigError(f"{path}: missing required key {key!r}")
        p = Path(values.pop(key))
        return p if p.is_absolute() else base / p

    def bool_of(key: str, default: bool) -> bool:
        raw = values.pop(key, None)
        if raw is None:
            return default
        if raw.lower() not in _BOOL_WORDS:
            raise ConfigError(f"{path}: {key} must be true/false, got {raw!r}")
        return _BOOL_WORDS[raw.lower()]

    def int_of(key: str, default: int) -> int:
        raw = values.pop(key, None)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"{path}: {key} must be an integer, got {raw!r}") from exc

    data_dir = path_of("data_dir")
    policy_file = path_of("policy_file")
    catalog_file = path_of("catalog_file")
    snapshot = bool_of("snapshot_on_shutdown", True)
    window = int_of("monitor_window", 20)
    port = int_of("port", 8080)
    host = values.pop("host", "127.0.0.1")
    engines = _parse_engines(values.pop("engines", None), path)
    if values:
        raise ConfigError(f"{path}: unknown config keys: {sorted(values)}")
    return HubConfig(
        data_dir=data_dir,
        policy_file=policy_file,
        catalog_file=catalog_file,
        snapshot_on_shutdown=snapshot,
        monitor_window=window,
        host=host,
        port=port,
        engines=engines,
    )


def _parse_engines(raw, path: Path) -> tuple[tuple[str, EngineKind], ...]:
    if raw is None:
        return DEFAULT_ENGINES
    engines = []
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        if ":" not in part:
            raise ConfigError(f"{path}: engine spec {part!r} is not 'id:kind'")
        eid, _, kind = part.partition(":")
        try:
            engines.append((eid.strip(), EngineKind(kind.strip())))
        except ValueError as exc:
            raise ConfigError(f"{path}: unknown engine kind in {part!r}") from exc
    if not engines:
        raise ConfigError(f"{path}: engines list is empty")
    return tuple(engines)
