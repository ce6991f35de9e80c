"""
SELECT クエリ言語

    SELECT ?v+ WHERE { pattern (. pattern)* } (FILTER guard)* (LIMIT n)?
"""

from __future__ import annotations

from dataclasses import dataclass

from .exceptions import QuerySyntaxError, UnsafeQuery
from .grammar import TokenStream, read_guard, read_pattern
from .ntriples import format_term
from .patterns import Guard, TriplePattern, solve


@dataclass(frozen=True)
class Query:
    select: tuple[str, ...]
    patterns: tuple[TriplePattern, ...]
    filters: tuple[Guard, ...] = ()
    limit: int | None = None

    def pattern_variables(self):
        return set().union(*(p.variables() for p in self.patterns))


@dataclass(frozen=True)
class ResultTable:
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]

    def __len__(self):
        return len(self.rows)

    def as_dict(self):
        return {
            "columns": list(self.columns),
            "rows": [[format_term(t) for t in row] for row in self.rows],
        }


def parse_query(text: str, bound=()) -> Query:
    """
    クエリを解析し安全性を検査する。
    bound には外部から束縛される変数名（合成パイプラインのトリガー変数）を渡せる。
    """
    stream = TokenStream(text, QuerySyntaxError)
    stream.expect_keyword("SELECT")
    select = []
    while stream.peek() is not None and stream.peek().kind == "VAR":
        name = stream.next().text[1:]
        if name not in select:
            select.append(name)
    if not select:
        raise stream.error(stream.peek(), "expected at least one ?variable after SELECT")

    stream.expect_keyword("WHERE")
    stream.expect_punct("{")
    patterns = [read_pattern(stream)]
    while stream.at_punct("."):
        stream.next()
        if stream.at_punct("}"):
            break
        patterns.append(read_pattern(stream))
    stream.expect_punct("}")

    filters = []
    while stream.at_keyword("FILTER"):
        stream.next()
        filters.append(read_guard(stream))

    limit = None
    if stream.at_keyword("LIMIT"):
        stream.next()
        token = stream.next()
        if token.kind != "NUMBER" or not token.text.isdigit() or int(token.text) <= 0:
            raise stream.error(token, "LIMIT expects a positive integer")
        limit = int(token.text)

    if not stream.at_end():
        raise stream.error(stream.peek(), f"unexpected {stream.peek().text!r}")

    query = Query(tuple(select), tuple(patterns), tuple(filters), limit)
    available = query.pattern_variables() | set(bound)
    unsafe = sorted((set(select) | {g.variable for g in filters}) - available)
    if unsafe:
        raise UnsafeQuery(unsafe)
    return query


def parse_pattern(text: str) -> TriplePattern:
    """単独のトリプルパターン（購読や合成のトリガー）"""
    stream = TokenStream(text, QuerySyntaxError)
    pattern = read_pattern(stream)
    if stream.at_punct("."):
        stream.next()
    if not stream.at_end():
        raise stream.error(stream.peek(), f"unexpected {stream.peek().text!r}")
    return pattern


def _passes(filters, bindings):
    try:
        return all(guard.holds(bindings[guard.variable]) for guard in filters)
    except TypeError:
        return False


def evaluate_query(query: Query, store, seed=None) -> ResultTable:
    """結合 → フィルタ → 射影・重複除去 → 直列化表現で整列 → LIMIT"""
    rows = set()
    # 結合の間はストアへの書き込みを待たせる
    with store.exclusive():
        solutions = solve(query.patterns, store, seed)
    for bindings in solutions:
        if not _passes(query.filters, bindings):
            continue
        rows.add(tuple(bindings[name] for name in query.select))
    ordered = sorted(rows, key=lambda row: tuple(format_term(t) for t in row))
    if query.limit is not None:
        ordered = ordered[:query.limit]
    return ResultTable(query.select, tuple(ordered))
