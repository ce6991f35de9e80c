"""
ナレッジモデル: 項（IRI・型付きリテラル・空白ノード）、トリプル、固定プレフィックス表

項は rdflib の URIRef / Literal / BNode の派生クラスで、生成時にこのモデルの制約を検査する。
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from types import MappingProxyType
from typing import Union

import rdflib
from rdflib import BNode, Namespace, URIRef

from .exceptions import MalformedIri, MalformedLiteral, NonFiniteValue

# 字句形式をそのまま保つ（"39"^^xsd:double を "39.0" に書き換えない）
rdflib.NORMALIZE_LITERALS = False

# N-Triples の IRIREF に現れてはならない文字
_FORBIDDEN_IRI_CHARS = frozenset('<>"{}|^`\\')
_SCHEME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*:")
_BLANK_RE = re.compile(r"^[A-Za-z0-9_]+$")
_NUMBER_RE = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")
_INTEGER_RE = re.compile(r"^[+-]?\d+$")
_LOCAL_NAME_RE = re.compile(r"^[A-Za-z0-9_](?:[A-Za-z0-9_.\-]*[A-Za-z0-9_\-])?$")


def _check_iri(value):
    if not isinstance(value, str) or not value:
        raise MalformedIri(f"empty IRI: {value!r}")
    if any(ch.isspace() for ch in value):
        raise MalformedIri(f"IRI contains whitespace: {value!r}")
    if "<" in value or ">" in value:
        raise MalformedIri(f"IRI contains angle brackets: {value!r}")
    if any(ch in _FORBIDDEN_IRI_CHARS for ch in value):
        raise MalformedIri(f"IRI contains a character not allowed in N-Triples: {value!r}")
    if not _SCHEME_RE.match(value):
        raise MalformedIri(f"IRI has no scheme: {value!r}")


class Iri(URIRef):
    __slots__ = ()

    def __new__(cls, value):
        _check_iri(value)
        return super().__new__(cls, str(value))

    def __reduce__(self):
        return (Iri, (str(self),))

    @property
    def value(self) -> str:
        return str(self)


class Vocabulary(Namespace):
    """属性アクセスで Iri を返す名前空間（SSN.Observation など）"""

    def term(self, name):
        return Iri(self + name)


RDF = Vocabulary("http://www.w3.org/1999/02/22-rdf-syntax-ns#")
XSD = Vocabulary("http://www.w3.org/2001/XMLSchema#")
SSN = Vocabulary("urn:knotgate:ssn#")
M3 = Vocabulary("urn:knotgate:m3#")
UNIT = Vocabulary("urn:knotgate:unit#")

# 閉じた表（この5つ以外のプレフィックスは存在しない）
PREFIXES = MappingProxyType({
    "rdf": RDF,
    "ssn": SSN,
    "m3": M3,
    "unit": UNIT,
    "xsd": XSD,
})

# rdflib の Literal.datatype は URIRef なので、比較用の定数も URIRef にする
XSD_DOUBLE = URIRef(XSD + "double")
XSD_LONG = URIRef(XSD + "long")
XSD_STRING = URIRef(XSD + "string")
NUMERIC_DATATYPES = frozenset({XSD_DOUBLE, XSD_LONG})


class Literal(rdflib.Literal):
    """型付きリテラル。言語タグは持たない"""

    __slots__ = ()

    def __new__(cls, lexical, datatype=XSD_STRING):
        if not isinstance(lexical, str):
            raise MalformedLiteral(f"lexical form must be text: {lexical!r}")
        try:
            _check_iri(datatype)
        except MalformedIri as exc:
            raise MalformedLiteral(f"bad datatype: {exc.detail}") from exc
        lexical, datatype = str(lexical), URIRef(str(datatype))
        if datatype == XSD_LONG and not _INTEGER_RE.match(lexical):
            raise MalformedLiteral(f"not an xsd:long lexical form: {lexical!r}")
        if datatype == XSD_DOUBLE and not _NUMBER_RE.match(lexical):
            raise MalformedLiteral(f"not an xsd:double lexical form: {lexical!r}")
        return super().__new__(cls, lexical, datatype=datatype, normalize=False)

    def __reduce__(self):
        return (Literal, (str(self), self.datatype))

    @property
    def lexical(self) -> str:
        return str(self)

    @property
    def is_numeric(self):
        return self.datatype in NUMERIC_DATATYPES

    def numeric_value(self) -> Decimal:
        """数値リテラルの値（字句形式に依存しない比較用）"""
        if not self.is_numeric:
            raise MalformedLiteral(f"not a numeric literal: {self.lexical!r}")
        return Decimal(self.lexical)


class Blank(BNode):
    __slots__ = ()

    def __new__(cls, label):
        if not isinstance(label, str) or not _BLANK_RE.match(label):
            raise MalformedLiteral(f"bad blank node label: {label!r}")
        return super().__new__(cls, str(label))

    def __reduce__(self):
        return (Blank, (str(self),))

    @property
    def label(self) -> str:
        return str(self)


Term = Union[Iri, Literal, Blank]


def as_term(node) -> Term:
    """rdflib のノードをこのモデルの項にする（型なしリテラル・言語タグは不可）"""
    if isinstance(node, (Iri, Literal, Blank)):
        return node
    if isinstance(node, URIRef):
        return Iri(node)
    if isinstance(node, BNode):
        return Blank(node)
    if isinstance(node, rdflib.Literal):
        if node.language:
            raise MalformedLiteral(f"language tags are not supported: @{node.language}")
        if node.datatype is None:
            raise MalformedLiteral("literal without ^^<datatype>")
        return Literal(str(node), node.datatype)
    raise MalformedLiteral(f"not an RDF term: {node!r}")


@dataclass(frozen=True, slots=True)
class Triple:
    subject: Term
    predicate: Term
    object: Term

    def __post_init__(self):
        if not isinstance(self.subject, (Iri, Blank)):
            raise MalformedLiteral(f"subject must be an IRI or blank node: {self.subject!r}")
        if not isinstance(self.predicate, Iri):
            raise MalformedIri(f"predicate must be an IRI: {self.predicate!r}")
        if not isinstance(self.object, (Iri, Literal, Blank)):
            raise MalformedLiteral(f"object must be a term: {self.object!r}")

    def __iter__(self):
        return iter((self.subject, self.predicate, self.object))


def expand_curie(text):
    """prefix:name を展開する。表にないプレフィックスはエラー"""
    prefix, sep, local = text.partition(":")
    if not sep:
        raise MalformedIri(f"missing scheme or prefix: {text!r}")
    if prefix not in PREFIXES:
        raise MalformedIri(f"unknown prefix {prefix!r} in {text!r}")
    return PREFIXES[prefix] + local


def expand_iri(text):
    """プレフィックス付き名は展開し、絶対IRIはそのまま返す（冪等）"""
    prefix, sep, local = text.partition(":")
    if sep and prefix in PREFIXES:
        return PREFIXES[prefix] + local
    return str(text)


def make_iri(text) -> Iri:
    return Iri(expand_iri(text))


def format_double(value: float) -> str:
    """最短で往復可能な10進表記"""
    if value.is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def make_numeric(value, datatype=XSD_DOUBLE) -> Literal:
    datatype = URIRef(expand_iri(datatype))
    if datatype not in NUMERIC_DATATYPES:
        raise MalformedLiteral(f"not a numeric datatype: {datatype!r}")
    if isinstance(value, bool):
        raise MalformedLiteral("booleans are not numbers")
    if isinstance(value, str):
        try:
            value = Decimal(value)
        except InvalidOperation as exc:
            raise MalformedLiteral(f"not a number: {value!r}") from exc
    if isinstance(value, Decimal):
        if not value.is_finite():
            raise NonFiniteValue(f"value is not finite: {value}")
    elif not math.isfinite(value):
        raise NonFiniteValue(f"value is not finite: {value}")

    if datatype == XSD_LONG:
        if value != int(value):
            raise MalformedLiteral(f"xsd:long requires an integral value: {value}")
        return Literal(str(int(value)), XSD_LONG)
    as_float = float(value)
    if not math.isfinite(as_float):
        raise NonFiniteValue(f"value overflows a double: {value}")
    return Literal(format_double(as_float), XSD_DOUBLE)


def compact_iri(value):
    """名前空間が表にあればプレフィックス付き名に縮める"""
    value = str(value)
    for prefix, namespace in PREFIXES.items():
        if value.startswith(namespace):
            local = value[len(namespace):]
            if _LOCAL_NAME_RE.match(local):
                return f"{prefix}:{local}"
    return None


def compact_term(term):
    """アプリケーション向けペイロードでの項の表示形"""
    if isinstance(term, Iri):
        return compact_iri(term) or term.value
    if isinstance(term, Literal):
        return term.lexical
    return f"_:{term.label}"
