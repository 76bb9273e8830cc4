"""Shared test oracles and fixtures helpers.

Everything here is deliberately independent of the code paths it checks:
truth tables via Python eval, brute-force scans, and serial replays.
"""

from __future__ import annotations

import re
from contextlib import contextmanager
from itertools import product

TOKENS = ("a", "b", "c")


def visibility_oracle(expression: str, auths: set[str]) -> bool:
    """Truth-table oracle: rewrite the label into a Python boolean expression
    over membership tests and eval it. Python's `and` binds tighter than
    `or`, matching the label grammar."""
    if expression.strip() == "":
        return True
    rewritten = re.sub(
        r"[A-Za-z0-9_]+",
        lambda m: str(m.group() in auths),
        expression,
    )
    rewritten = rewritten.replace("&", " and ").replace("|", " or ")
    return bool(eval(rewritten))  # noqa: S307 - closed token alphabet


def visibility_expressions(max_cases: int | None = None) -> list[str]:
    """Every expression over <=3 tokens with nesting depth <=2."""
    depth0 = list(TOKENS)
    depth1 = [f"{x}{op}{y}" for x, y in product(depth0, depth0) for op in "&|"]
    shallow = depth0 + depth1
    depth2 = [f"({x}){op}({y})" for x, y in product(shallow, shallow) for op in "&|"]
    expressions = depth0 + depth1 + depth2
    return expressions[:max_cases] if max_cases else expressions


def auth_subsets() -> list[set[str]]:
    out = []
    for mask in range(8):
        out.append({t for i, t in enumerate(TOKENS) if mask >> i & 1})
    return out


@contextmanager
def acceptance(number: int, label: str):
    """Print one pass/fail line per acceptance criterion."""
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {number:2d} [{label}]: FAIL")
        raise
    print(f"ACCEPTANCE {number:2d} [{label}]: PASS")
