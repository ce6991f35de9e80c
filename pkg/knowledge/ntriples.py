"""
行指向のトリプル直列化（N-Triples のサブセット）

文法: <subj> <pred> obj .  （obj は <iri> / _:label / "lexical"^^<datatype>）
"#" で始まる行はコメント。言語タグ・型なしリテラル・相対IRIは扱わない。
各行は rdflib の W3CNTriplesParser で読み、このモデルの項に変換する。
"""

from __future__ import annotations

from rdflib import BNode
from rdflib.exceptions import ParserError
from rdflib.plugins.parsers.ntriples import W3CNTriplesParser

from .exceptions import KnowledgeError, ParseError
from .terms import Literal, Triple, as_term

_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r"}


def escape_lexical(text):
    return "".join(_ESCAPES.get(ch, ch) for ch in text)


def format_term(term) -> str:
    if isinstance(term, Literal):
        return f'"{escape_lexical(term.lexical)}"^^<{term.datatype}>'
    return term.n3()


def format_triple(triple: Triple) -> str:
    s, p, o = triple
    return f"{format_term(s)} {format_term(p)} {format_term(o)} ."


def triple_sort_key(triple: Triple):
    return tuple(format_term(t) for t in triple)


def serialize_triples(triples) -> str:
    return "".join(format_triple(t) + "\n" for t in triples)


class _ListSink:
    """パーサが読んだトリプルを読んだ順に貯める（重複も残す）"""

    def __init__(self):
        self.nodes = []

    def triple(self, s, p, o):
        self.nodes.append((s, p, o))


class _BlankLabels(dict):
    """
    _:label のラベルを振り直さずにそのまま使う。
    パーサがどの参照方法（in / [] / get / setdefault）を使っても同じノードを返す。
    """

    def __contains__(self, label):
        return True

    def __missing__(self, label):
        node = self[label] = BNode(label)
        return node

    def get(self, label, default=None):
        return self[label]

    def setdefault(self, label, default=None):
        return self[label]


def _reason(exc):
    text = str(exc).strip()
    return text.splitlines()[0] if text else type(exc).__name__


def parse_triples(document: str) -> list[Triple]:
    sink = _ListSink()
    parser = W3CNTriplesParser(sink)
    labels = _BlankLabels()
    triples = []
    for line_no, raw in enumerate(document.split("\n"), start=1):
        line = raw.rstrip("\r")
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        sink.nodes.clear()
        try:
            parser.parsestring(line + "\n", bnode_context=labels)
        except ParserError as exc:
            raise ParseError(line_no, _reason(exc))
        try:
            triples.extend(Triple(*(as_term(node) for node in nodes)) for nodes in sink.nodes)
        except KnowledgeError as exc:
            raise ParseError(line_no, exc.detail)
    return triples
