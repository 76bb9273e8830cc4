"""Scoped query language: parser, planner, executor, performance monitor."""

from .ast import ArrSub, CastSource, KvScan, RelSelect, ScopedQuery, render
from .executor import ExecResult, execute, result_size
from .monitor import Monitor, QueryRecord, query_signature
from .parser import parse, parse_predicate
from .planner import ExecutionStep, Plan, explain, plan

__all__ = [
    "ArrSub",
    "CastSource",
    "KvScan",
    "RelSelect",
    "ScopedQuery",
    "render",
    "ExecResult",
    "execute",
    "result_size",
    "Monitor",
    "QueryRecord",
    "query_signature",
    "parse",
    "parse_predicate",
    "ExecutionStep",
    "Plan",
    "explain",
    "plan",
]
