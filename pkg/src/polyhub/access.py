"""Access control: query control plus view-based result filtering.

Two composable mechanisms, both default-deny. Query control decides whether
a query may run at all (islands, tables, result-size limits); view policies
filter what a base-table read returns (columns and rows). A principal's
roles combine most-permissively: the union of what any role grants.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Union

from .engines.base import IslandTag
from .engines.relational import Comparison, Relation, Schema, eval_predicate
from .errors import AccessDenied, ConfigError, LimitExceeded
from .query.ast import RelSelect, ScopedQuery
from .query.parser import parse_predicate

AUTH_TOKEN_RE = re.compile(r"[A-Za-z0-9_]+\Z")


@dataclass(frozen=True)
class Principal:
    id: str
    roles: frozenset[str] = frozenset()
    auths: frozenset[str] = frozenset()

    def __post_init__(self):
        for token in self.auths:
            if not AUTH_TOKEN_RE.match(token):
                raise ConfigError(f"invalid auth token {token!r} for principal {self.id!r}")


@dataclass(frozen=True)
class ViewPolicy:
    """What one role may see of one table; ``allowed_columns`` of None = ALL."""

    role: str
    table: str
    allowed_columns: Optional[frozenset[str]] = None
    row_predicate: tuple[Comparison, ...] = ()


@dataclass(frozen=True)
class QueryPolicy:
    """Which queries one role may issue; ``table_allowlist`` of None = ALL."""

    role: str
    allowed_islands: frozenset[IslandTag] = frozenset()
    table_allowlist: Optional[frozenset[str]] = None
    max_result_rows: Optional[int] = None
    require_limit: bool = False

    def __post_init__(self):
        if self.max_result_rows is not None and self.max_result_rows < 1:
            raise ConfigError("max_result_rows must be positive")


@dataclass(frozen=True)
class Decision:
    verdict: str  # "allow" | "deny"
    reason: str = ""

    def __post_init__(self):
        if self.verdict == "deny" and not self.reason:
            raise ValueError("a deny decision needs a reason")

    @property
    def allowed(self) -> bool:
        return self.verdict == "allow"


class PolicyStore:
    """Principals plus both policy kinds; file-backed, reloadable."""

    def __init__(
        self,
        principals: Iterable[Principal] = (),
        view_policies: Iterable[ViewPolicy] = (),
        query_policies: Iterable[QueryPolicy] = (),
    ):
        self._lock = threading.Lock()
        self._load(principals, view_policies, query_policies)

    def _load(self, principals, view_policies, query_policies) -> None:
        by_id: dict[str, Principal] = {}
        for p in principals:
            if p.id in by_id:
                raise ConfigError(f"duplicate principal id {p.id!r}")
            by_id[p.id] = p
        views: dict[tuple[str, str], ViewPolicy] = {}
        for v in view_policies:
            key = (v.role, v.table)
            if key in views:
                raise ConfigError(f"duplicate view policy for role {v.role!r} on {v.table!r}")
            views[key] = v
        queries: dict[str, QueryPolicy] = {}
        for q in query_policies:
            if q.role in queries:
                raise ConfigError(f"duplicate query policy for role {q.role!r}")
            queries[q.role] = q
        with self._lock:
            self._principals = by_id
            self._views = views
            self._queries = queries

    def principal(self, principal_id: str) -> Principal:
        with self._lock:
            if principal_id not in self._principals:
                raise AccessDenied(f"unknown principal {principal_id!r}")
            return self._principals[principal_id]

    def view_policy(self, role: str, table: str) -> Optional[ViewPolicy]:
        with self._lock:
            return self._views.get((role, table))

    def query_policy(self, role: str) -> Optional[QueryPolicy]:
        with self._lock:
            return self._queries.get(role)

    # -- persistence -----------------------------------------------------

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "PolicyStore":
        store = cls()
        store.reload(path)
        return store

    def reload(self, path: Union[str, Path]) -> None:
        """Re-read a policy file; replaces the store contents atomically."""
        path = Path(path)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read policy file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"policy file {path} is not valid JSON: {exc}") from exc
        try:
            principals = [
                Principal(
                    id=p["id"],
                    roles=frozenset(p.get("roles", [])),
                    auths=frozenset(p.get("auths", [])),
                )
                for p in doc.get("principals", [])
            ]
            view_policies = [
                ViewPolicy(
                    role=v["role"],
                    table=v["table"],
                    allowed_columns=_columns_field(v.get("allowed_columns", "ALL")),
                    row_predicate=(
                        parse_predicate(v["row_predicate"]) if v.get("row_predicate") else ()
                    ),
                )
                for v in doc.get("view_policies", [])
            ]
            query_policies = [
                QueryPolicy(
                    role=q["role"],
                    allowed_islands=frozenset(IslandTag(t) for t in q.get("allowed_islands", [])),
                    table_allowlist=_columns_field(q.get("table_allowlist", "ALL")),
                    max_result_rows=q.get("max_result_rows"),
                    require_limit=bool(q.get("require_limit", False)),
                )
                for q in doc.get("query_policies", [])
            ]
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"policy file {path} is malformed: {exc}") from exc
        self._load(principals, view_policies, query_policies)


def _columns_field(value) -> Optional[frozenset[str]]:
    if value == "ALL" or value is None:
        return None
    return frozenset(value)


# -- query control ------------------------------------------------------------


@dataclass(frozen=True)
class EffectiveQueryPolicy:
    """Most-permissive union of the principal's role policies."""

    allowed_islands: frozenset[IslandTag]
    table_allowlist: Optional[frozenset[str]]
    max_result_rows: Optional[int]
    require_limit: bool


def effective_query_policy(principal: Principal, store: PolicyStore) -> Optional[EffectiveQueryPolicy]:
    policies = [
        policy
        for role in sorted(principal.roles)
        if (policy := store.query_policy(role)) is not None
    ]
    if not policies:
        return None
    islands = frozenset().union(*(p.allowed_islands for p in policies))
    allowlist: Optional[frozenset[str]]
    if any(p.table_allowlist is None for p in policies):
        allowlist = None
    else:
        allowlist = frozenset().union(*(p.table_allowlist for p in policies))
    if any(p.max_result_rows is None for p in policies):
        max_rows = None
    else:
        max_rows = max(p.max_result_rows for p in policies)
    require_limit = all(p.require_limit for p in policies)
    return EffectiveQueryPolicy(
        allowed_islands=islands,
        table_allowlist=allowlist,
        max_result_rows=max_rows,
        require_limit=require_limit,
    )


def check_query(principal: Principal, ast: ScopedQuery, store: PolicyStore) -> Decision:
    """Decide whether the principal may run this query at all."""
    merged = effective_query_policy(principal, store)
    if merged is None:
        return Decision("deny", f"no query policy applies to principal {principal.id!r}")
    for scoped in ast.walk():
        if scoped.island not in merged.allowed_islands:
            allowed = ", ".join(sorted(t.value for t in merged.allowed_islands)) or "none"
            return Decision(
                "deny",
                f"island {scoped.island.value} is not permitted (allowed: {allowed})",
            )
    if merged.table_allowlist is not None:
        for _, table in ast.referenced_tables():
            if table not in merged.table_allowlist:
                return Decision("deny", f"table {table!r} is not in the allowlist")
    if merged.require_limit and ast.island is IslandTag.REL:
        body = ast.body
        assert isinstance(body, RelSelect)
        if body.limit is None:
            return Decision("deny", "query policy requires an explicit LIMIT")
        if merged.max_result_rows is not None and body.limit > merged.max_result_rows:
            return Decision(
                "deny",
                f"LIMIT {body.limit} exceeds the maximum of {merged.max_result_rows} rows",
            )
    return Decision("allow")


def enforce_result_limit(rows: Iterable, limit: Optional[int]) -> list:
    """Materialize a result stream, aborting the moment it crosses ``limit``.

    Either the full result (at most ``limit`` items) comes back, or
    LimitExceeded is raised; a truncated result is never returned.
    """
    if limit is None:
        return list(rows)
    out = []
    for item in rows:
        if len(out) >= limit:
            raise LimitExceeded(limit)
        out.append(item)
    return out


# -- view-based filtering -------------------------------------------------------


def apply_view(principal: Principal, table: str, relation: Relation, store: PolicyStore) -> Relation:
    """Filter a base-table read down to what the principal's roles may see.

    Columns are the union of the granting roles' column sets; a row survives
    if any granting role's predicate passes (no predicate = all rows). A
    principal with no policy on the table is denied outright.
    """
    granting = [
        policy
        for role in sorted(principal.roles)
        if (policy := store.view_policy(role, table)) is not None
    ]
    if not granting:
        raise AccessDenied(f"principal {principal.id!r} has no view policy on table {table!r}")
    schema = relation.schema
    if any(p.allowed_columns is None for p in granting):
        visible = list(schema.column_names)
    else:
        allowed = frozenset().union(*(p.allowed_columns for p in granting))
        visible = [name for name in schema.column_names if name in allowed]
    indices = [schema.column_index(name) for name in visible]
    rows = []
    for row in relation.rows:
        if any(eval_predicate(schema, row, p.row_predicate) for p in granting):
            rows.append(tuple(row[i] for i in indices))
    out_schema = Schema(
        columns=tuple(schema.columns[i] for i in indices),
        key_column=schema.key_column if schema.key_column in visible else None,
    )
    return Relation(schema=out_schema, rows=rows)


def visible_columns(principal: Principal, table: str, store: PolicyStore) -> Optional[frozenset[str]]:
    """Union of columns the principal may reference on a table; None = ALL.
    Raises AccessDenied when no role grants the table."""
    granting = [
        policy
        for role in sorted(principal.roles)
        if (policy := store.view_policy(role, table)) is not None
    ]
    if not granting:
        raise AccessDenied(f"principal {principal.id!r} has no view policy on table {table!r}")
    if any(p.allowed_columns is None for p in granting):
        return None
    return frozenset().union(*(p.allowed_columns for p in granting))


def principal_auths(principal: Principal) -> frozenset[str]:
    """The exact token set the executor must hand to key-value scans."""
    return principal.auths
