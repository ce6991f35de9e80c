"""
ルールパックとクエリで共通の字句解析・項の構文解析
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal

from .exceptions import GrammarError, KnowledgeError
from .patterns import Guard, TriplePattern, Variable
from .terms import XSD_DOUBLE, XSD_STRING, Iri, Literal, expand_curie, make_iri, make_numeric

_PNAME = r"[A-Za-z][A-Za-z0-9_\-]*:[A-Za-z0-9_](?:[A-Za-z0-9_.\-]*[A-Za-z0-9_\-])?"

_TOKEN_RE = re.compile(
    "|".join([
        r"(?P<IRI><[^<>\s]*>)",
        r'(?P<LITERAL>"(?:[^"\\\n]|\\.)*"(?:\^\^(?:<[^<>\s]*>|' + _PNAME + r"))?)",
        r"(?P<VAR>\?[A-Za-z0-9_]+)",
        r"(?P<NUMBER>[+-]?(?:\d+(?:\.\d+)?|\.\d+)(?:[eE][+-]?\d+)?)",
        r"(?P<PNAME>" + _PNAME + r")",
        r"(?P<OP><=|>=|!=|<|>|=)",
        r"(?P<PUNCT>[{}.:])",
        r"(?P<WORD>[A-Za-z0-9_][A-Za-z0-9_\-]*)",
    ])
)

_UNESCAPES = {"\\": "\\", '"': '"', "n": "\n", "r": "\r", "t": "\t"}

GUARD_OPERATORS = ("<", "<=", ">", ">=", "=", "!=")


@dataclass(frozen=True, slots=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text, error_cls=GrammarError):
    tokens = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        ch = text[pos]
        if ch == "\n":
            pos += 1
            line, line_start = line + 1, pos
            continue
        if ch.isspace():
            pos += 1
            continue
        if ch == "#":
            end = text.find("\n", pos)
            pos = len(text) if end < 0 else end
            continue
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise error_cls(line, pos - line_start + 1, f"unexpected character {ch!r}")
        tokens.append(Token(m.lastgroup, m.group(), line, pos - line_start + 1))
        pos = m.end()
    return tokens


class TokenStream:
    """トークン列の読み進めと、位置付きエラーの生成"""

    def __init__(self, text, error_cls=GrammarError):
        self.error_cls = error_cls
        self.tokens = tokenize(text, error_cls)
        self.index = 0
        lines = text.split("\n")
        self._end = (len(lines), len(lines[-1]) + 1)

    def peek(self):
        if self.index < len(self.tokens):
            return self.tokens[self.index]
        return None

    def next(self):
        token = self.peek()
        if token is None:
            raise self.error_cls(*self._end, "unexpected end of input")
        self.index += 1
        return token

    def error(self, token, reason):
        if token is None:
            return self.error_cls(*self._end, reason)
        return self.error_cls(token.line, token.column, reason)

    def at_keyword(self, *words):
        token = self.peek()
        return token is not None and token.kind == "WORD" and token.text in words

    def at_punct(self, text):
        token = self.peek()
        return token is not None and token.kind == "PUNCT" and token.text == text

    def expect_keyword(self, word):
        token = self.peek()
        if not self.at_keyword(word):
            raise self.error(token, f"expected {word}")
        return self.next()

    def expect_punct(self, text):
        token = self.peek()
        if not self.at_punct(text):
            raise self.error(token, f"expected {text!r}")
        return self.next()

    def expect_word(self, what):
        token = self.peek()
        if token is None or token.kind != "WORD":
            raise self.error(token, f"expected {what}")
        return self.next()

    def at_end(self):
        return self.peek() is None


def _unescape(body):
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\":
            i += 1
            code = body[i]
            if code not in _UNESCAPES:
                raise ValueError(f"unknown escape \\{code}")
            out.append(_UNESCAPES[code])
        else:
            out.append(ch)
        i += 1
    return "".join(out)


def read_slot(stream: TokenStream):
    """パターン中の1項（IRI・prefix:name・?変数・リテラル・数値）"""
    token = stream.next()
    try:
        if token.kind == "VAR":
            return Variable(token.text[1:])
        if token.kind == "IRI":
            return make_iri(token.text[1:-1])
        if token.kind == "PNAME":
            return Iri(expand_curie(token.text))
        if token.kind == "NUMBER":
            return make_numeric(Decimal(token.text), XSD_DOUBLE)
        if token.kind == "LITERAL":
            close = token.text.rindex('"')
            lexical = _unescape(token.text[1:close])
            datatype = XSD_STRING
            suffix = token.text[close + 1:]
            if suffix:
                tag = suffix[2:]
                datatype = tag[1:-1] if tag.startswith("<") else expand_curie(tag)
            return Literal(lexical, make_iri(datatype).value)
    except (KnowledgeError, ValueError) as exc:
        raise stream.error(token, getattr(exc, "detail", str(exc))) from exc
    raise stream.error(token, f"expected a term, found {token.text!r}")


def read_pattern(stream: TokenStream) -> TriplePattern:
    start = stream.peek()
    subject = read_slot(stream)
    predicate_token = stream.peek()
    predicate = read_slot(stream)
    obj = read_slot(stream)
    if isinstance(subject, Literal):
        raise stream.error(start, "pattern subject must not be a literal")
    if not isinstance(predicate, (Iri, Variable)):
        raise stream.error(predicate_token, "pattern predicate must be an IRI or variable")
    return TriplePattern(subject, predicate, obj)


def read_guard(stream: TokenStream):
    """?var op number"""
    var_token = stream.next()
    if var_token.kind != "VAR":
        raise stream.error(var_token, "guard must start with a variable")
    op_token = stream.next()
    if op_token.kind != "OP":
        raise stream.error(op_token, f"expected one of {' '.join(GUARD_OPERATORS)}")
    number_token = stream.next()
    if number_token.kind != "NUMBER":
        raise stream.error(number_token, "guard constant must be a number")
    return Guard(var_token.text[1:], op_token.text, Decimal(number_token.text))
