"""Per-step query performance records and moving averages.

The planner consults the moving average of recent step durations per engine
when several engines can serve the same object.
"""

from __future__ import annotations

import hashlib
import threading
import time
from dataclasses import dataclass, field
from typing import Optional

from ..engines.base import IslandTag

DEFAULT_WINDOW = 20


def query_signature(text: str) -> str:
    """Checksum of the whitespace-collapsed, case-folded query text."""
    normalized = " ".join(text.split()).casefold()
    return hashlib.sha256(normalized.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class QueryRecord:
    query_signature: str
    island: IslandTag
    engine_id: str
    duration_ms: float
    result_rows: int
    timestamp: float = field(default_factory=time.time)

    def __post_init__(self):
        if self.duration_ms < 0:
            raise ValueError("duration must be nonnegative")


class Monitor:
    """Append-only log of execution records with windowed per-engine means."""

    def __init__(self, window: int = DEFAULT_WINDOW):
        if window < 1:
            raise ValueError("window must be at least 1")
        self.window = window
        self._records: list[QueryRecord] = []
        self._lock = threading.Lock()

    def record(self, record: QueryRecord) -> None:
        with self._lock:
            self._records.append(record)

    def records(self) -> list[QueryRecord]:
        with self._lock:
            return list(self._records)

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)

    def average(self, engine_id: str) -> Optional[float]:
        """Mean duration (ms) of the engine's most recent records, at most
        ``window`` of them; None when the engine has no history."""
        with self._lock:
            durations = [r.duration_ms for r in self._records if r.engine_id == engine_id]
        if not durations:
            return None
        recent = durations[-self.window:]
        return sum(recent) / len(recent)
