"""Cell visibility expressions: boolean labels over authorization tokens.

Grammar (AND binds tighter than OR, parentheses override)::

    expr   := term ('|' term)*
    term   := factor ('&' factor)*
    factor := TOKEN | '(' expr ')'
    TOKEN  := [A-Za-z0-9_]+

The empty source string is a valid expression meaning "visible to all".
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import AbstractSet, Union

from ..errors import VisibilityError

TOKEN_RE = re.compile(r"[A-Za-z0-9_]+")


@dataclass(frozen=True)
class VisToken:
    name: str


@dataclass(frozen=True)
class VisAnd:
    parts: tuple["VisNode", ...]


@dataclass(frozen=True)
class VisOr:
    parts: tuple["VisNode", ...]


VisNode = Union[VisToken, VisAnd, VisOr]


@dataclass(frozen=True)
class VisibilityExpr:
    """Parsed visibility label. ``root`` is None for the empty (public) label."""

    source: str
    root: VisNode | None


class _VisParser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def parse(self) -> VisNode:
        node = self._expr()
        if self.pos != len(self.text):
            raise VisibilityError(
                f"unexpected {self.text[self.pos]!r} at offset {self.pos} in visibility {self.text!r}"
            )
        return node

    def _expr(self) -> VisNode:
        parts = [self._term()]
        while self._peek() == "|":
            self.pos += 1
            parts.append(self._term())
        return parts[0] if len(parts) == 1 else VisOr(tuple(parts))

    def _term(self) -> VisNode:
        parts = [self._factor()]
        while self._peek() == "&":
            self.pos += 1
            parts.append(self._factor())
        return parts[0] if len(parts) == 1 else VisAnd(tuple(parts))

    def _factor(self) -> VisNode:
        ch = self._peek()
        if ch == "(":
            self.pos += 1
            node = self._expr()
            if self._peek() != ")":
                raise VisibilityError(f"missing ')' in visibility {self.text!r}")
            self.pos += 1
            return node
        m = TOKEN_RE.match(self.text, self.pos)
        if not m:
            raise VisibilityError(
                f"expected token at offset {self.pos} in visibility {self.text!r}"
            )
        self.pos = m.end()
        return VisToken(m.group())

    def _peek(self) -> str:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1
        return self.text[self.pos] if self.pos < len(self.text) else ""


def parse_visibility(source: str) -> VisibilityExpr:
    """Parse a visibility label; raises VisibilityError on malformed input."""
    if source.strip() == "":
        return VisibilityExpr(source="", root=None)
    return VisibilityExpr(source=source, root=_VisParser(source).parse())


def visibility_eval(expr: VisibilityExpr, auths: AbstractSet[str]) -> bool:
    """True when the principal's tokens satisfy the label. Empty label: always true."""
    if expr.root is None:
        return True
    return _eval(expr.root, auths)


def _eval(node: VisNode, auths: AbstractSet[str]) -> bool:
    if isinstance(node, VisToken):
        return node.name in auths
    if isinstance(node, VisAnd):
        return all(_eval(p, auths) for p in node.parts)
    return any(_eval(p, auths) for p in node.parts)
