"""Recursive-descent parser for the scope-tagged query language.

Grammar (keywords case-insensitive)::

    query  := TAG '(' inner ')'                  TAG in {REL, KV, ARR}
    REL    := SELECT ('*' | col (',' col)*) FROM (ident | cast)
              [WHERE cmp (AND cmp)*] [LIMIT uint]
    cast   := CAST '(' query ',' TAG ')'
    KV     := SCAN ident [ROWS key ':' key] [COLS key (',' key)*]
    ARR    := SUB ident '[' uint ':' uint (',' uint ':' uint)* ']'
    cmp    := ident op literal                   op in {=, !=, <, <=, >, >=}

Identifiers are ``[A-Za-z_][A-Za-z0-9_]*``; keywords are reserved. Literals
are numbers or quoted text; row keys may be identifiers, quoted text, or
bare numbers (kept verbatim, so zero-padded keys survive).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from ..engines.base import IslandTag
from ..engines.relational import Comparison
from ..errors import ParseError
from .ast import ArrSub, CastSource, KvScan, QueryBody, RelSelect, ScopedQuery

KEYWORDS = {
    "SELECT", "FROM", "WHERE", "LIMIT", "AND", "CAST",
    "SCAN", "ROWS", "COLS", "SUB", "REL", "KV", "ARR",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>'[^']*'|"[^"]*")
  | (?P<op><=|>=|!=|=|<|>)
  | (?P<punct>[(),\[\]:*])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    type: str  # keyword | ident | number | string | op | punct | eof
    text: str  # raw lexeme (string tokens: unquoted value)
    pos: int   # 1-indexed character position


def _lex(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", pos + 1)
        kind = m.lastgroup
        lexeme = m.group()
        if kind != "ws":
            if kind == "ident" and lexeme.upper() in KEYWORDS:
                tokens.append(Token("keyword", lexeme.upper(), pos + 1))
            elif kind == "string":
                tokens.append(Token("string", lexeme[1:-1], pos + 1))
            else:
                tokens.append(Token(kind, lexeme, pos + 1))
        pos = m.end()
    tokens.append(Token("eof", "", len(text) + 1))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]):
        self._tokens = tokens
        self._pos = 0

    # -- token plumbing --------------------------------------------------

    def _peek(self) -> Token:
        return self._tokens[self._pos]

    def _advance(self) -> Token:
        tok = self._tokens[self._pos]
        if tok.type != "eof":
            self._pos += 1
        return tok

    def _match_keyword(self, word: str) -> bool:
        tok = self._peek()
        if tok.type == "keyword" and tok.text == word:
            self._advance()
            return True
        return False

    def _expect_keyword(self, word: str, context: str) -> None:
        if not self._match_keyword(word):
            raise ParseError(f"expected {word} {context}", self._peek().pos)

    def _expect_punct(self, symbol: str, context: str) -> None:
        tok = self._peek()
        if tok.type == "punct" and tok.text == symbol:
            self._advance()
            return
        raise ParseError(f"expected {symbol!r} {context}", tok.pos)

    def _check_punct(self, symbol: str) -> bool:
        tok = self._peek()
        if tok.type == "punct" and tok.text == symbol:
            self._advance()
            return True
        return False

    def _expect_ident(self, what: str) -> str:
        tok = self._peek()
        if tok.type == "ident":
            return self._advance().text
        if tok.type == "keyword" and tok.text == "CAST":
            raise ParseError("CAST is only allowed as a SELECT source", tok.pos)
        raise ParseError(f"expected {what}", tok.pos)

    # -- grammar ----------------------------------------------------------

    def parse_query(self) -> ScopedQuery:
        tok = self._peek()
        if tok.type == "keyword" and tok.text in ("REL", "KV", "ARR"):
            tag = IslandTag(self._advance().text)
        elif tok.type in ("ident", "keyword"):
            raise ParseError(f"unknown island tag {tok.text!r}", tok.pos)
        else:
            raise ParseError("expected island tag", tok.pos)
        self._expect_punct("(", f"after {tag.value}")
        body = self._parse_body(tag)
        self._expect_punct(")", "to close the query")
        return ScopedQuery(island=tag, body=body)

    def _parse_body(self, tag: IslandTag) -> QueryBody:
        if tag is IslandTag.REL:
            return self._parse_select()
        if tag is IslandTag.KV:
            return self._parse_scan()
        return self._parse_sub()

    def _parse_select(self) -> RelSelect:
        self._expect_keyword("SELECT", "to start a REL query")
        if self._check_punct("*"):
            columns = None
        else:
            columns = [self._expect_ident("column name")]
            while self._check_punct(","):
                columns.append(self._expect_ident("column name"))
        self._expect_keyword("FROM", "after the column list")
        source: Union[str, CastSource]
        if self._match_keyword("CAST"):
            self._expect_punct("(", "after CAST")
            inner = self.parse_query()
            self._expect_punct(",", "between cast query and target tag")
            target_tok = self._peek()
            if target_tok.type == "keyword" and target_tok.text in ("REL", "KV", "ARR"):
                target = IslandTag(self._advance().text)
            else:
                raise ParseError("expected cast target tag", target_tok.pos)
            if target is not IslandTag.REL:
                raise ParseError(
                    f"cast target must be REL when used as a SELECT source, got {target.value}",
                    target_tok.pos,
                )
            self._expect_punct(")", "to close CAST")
            source = CastSource(query=inner, target=target)
        else:
            source = self._expect_ident("table name after FROM")
        where: tuple[Comparison, ...] = ()
        if self._match_keyword("WHERE"):
            where = self._parse_predicate()
        limit = None
        if self._match_keyword("LIMIT"):
            limit = self._parse_uint("LIMIT value")
        return RelSelect(source=source, columns=None if columns is None else tuple(columns), where=where, limit=limit)

    def _parse_predicate(self) -> tuple[Comparison, ...]:
        comparisons = [self._parse_comparison()]
        while self._match_keyword("AND"):
            comparisons.append(self._parse_comparison())
        return tuple(comparisons)

    def _parse_comparison(self) -> Comparison:
        column = self._expect_ident("column name in predicate")
        tok = self._peek()
        if tok.type != "op":
            raise ParseError("expected comparison operator", tok.pos)
        op = self._advance().text
        return Comparison(column=column, op=op, value=self._parse_literal())

    def _parse_literal(self):
        tok = self._peek()
        if tok.type == "number":
            self._advance()
            return _number_value(tok.text)
        if tok.type == "string":
            self._advance()
            return tok.text
        raise ParseError("expected literal value", tok.pos)

    def _parse_scan(self) -> KvScan:
        self._expect_keyword("SCAN", "to start a KV query")
        table = self._expect_ident("table name after SCAN")
        row_range = None
        if self._match_keyword("ROWS"):
            start = self._parse_key("row range start")
            self._expect_punct(":", "between row range keys")
            end = self._parse_key("row range end")
            row_range = (start, end)
        columns = None
        if self._match_keyword("COLS"):
            columns = [self._parse_key("column name")]
            while self._check_punct(","):
                columns.append(self._parse_key("column name"))
        return KvScan(table=table, row_range=row_range, columns=None if columns is None else tuple(columns))

    def _parse_key(self, what: str) -> str:
        tok = self._peek()
        if tok.type in ("ident", "string", "number"):
            return self._advance().text  # numbers keep their raw text
        raise ParseError(f"expected {what}", tok.pos)

    def _parse_sub(self) -> ArrSub:
        self._expect_keyword("SUB", "to start an ARR query")
        array = self._expect_ident("array name after SUB")
        self._expect_punct("[", "before the range list")
        ranges = [self._parse_range()]
        while self._check_punct(","):
            ranges.append(self._parse_range())
        self._expect_punct("]", "after the range list")
        return ArrSub(array=array, ranges=tuple(ranges))

    def _parse_range(self) -> tuple[int, int]:
        lo = self._parse_uint("range start")
        self._expect_punct(":", "inside a range")
        hi = self._parse_uint("range end")
        return (lo, hi)

    def _parse_uint(self, what: str) -> int:
        tok = self._peek()
        if tok.type != "number":
            raise ParseError(f"expected {what}", tok.pos)
        value = _number_value(tok.text)
        if not isinstance(value, int) or value < 0:
            raise ParseError(f"{what} must be a nonnegative integer", tok.pos)
        self._advance()
        return value

    def expect_eof(self) -> None:
        tok = self._peek()
        if tok.type != "eof":
            raise ParseError(f"unexpected trailing input {tok.text!r}", tok.pos)


def _number_value(text: str) -> Union[int, float]:
    if re.fullmatch(r"-?\d+", text):
        return int(text)
    return float(text)


def parse(text: str) -> ScopedQuery:
    """Parse one scoped query; raises ParseError with a 1-indexed position."""
    parser = _Parser(_lex(text))
    query = parser.parse_query()
    parser.expect_eof()
    return query


def parse_predicate(text: str) -> tuple[Comparison, ...]:
    """Parse a standalone conjunction in the comparison mini-language
    (the dialect shared by WHERE clauses and view-policy row predicates)."""
    parser = _Parser(_lex(text))
    predicate = parser._parse_predicate()
    parser.expect_eof()
    return predicate
