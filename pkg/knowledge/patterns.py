"""
トリプルパターン（ルールとクエリで共有）と基本グラフパターンの結合
"""

from __future__ import annotations

import operator
import re
from dataclasses import dataclass
from decimal import Decimal
from typing import Union

from .exceptions import MalformedIri, MalformedLiteral
from .terms import Iri, Literal, Term, Triple

_VAR_RE = re.compile(r"^[A-Za-z0-9_]+$")


@dataclass(frozen=True, slots=True)
class Variable:
    name: str

    def __post_init__(self):
        if not isinstance(self.name, str) or not _VAR_RE.match(self.name):
            raise MalformedLiteral(f"bad variable name: {self.name!r}")

    def __str__(self):
        return f"?{self.name}"


Slot = Union[Term, Variable]


@dataclass(frozen=True, slots=True)
class TriplePattern:
    subject: Slot
    predicate: Slot
    object: Slot

    def __post_init__(self):
        if not isinstance(self.predicate, (Variable, Iri)):
            raise MalformedIri(f"pattern predicate must be an IRI or variable: {self.predicate!r}")

    def __iter__(self):
        return iter((self.subject, self.predicate, self.object))

    def variables(self):
        return {slot.name for slot in self if isinstance(slot, Variable)}

    def concrete_count(self):
        return sum(1 for slot in self if not isinstance(slot, Variable))


def unify(pattern: TriplePattern, triple: Triple, bindings=None):
    """パターンとトリプルを単一化し、束縛の辞書を返す（失敗時は None）"""
    result = dict(bindings) if bindings else {}
    for slot, term in zip(pattern, triple):
        if isinstance(slot, Variable):
            bound = result.get(slot.name)
            if bound is None:
                result[slot.name] = term
            elif bound != term:
                return None
        elif slot != term:
            return None
    return result


def substitute(pattern: TriplePattern, bindings) -> TriplePattern | None:
    """
    束縛済みの変数を項に置き換える。
    述語の位置にIRI以外の項が入る場合はどのトリプルとも一致しないので None を返す。
    """
    slots = [bindings.get(s.name, s) if isinstance(s, Variable) else s for s in pattern]
    if not isinstance(slots[1], (Variable, Iri)):
        return None
    return TriplePattern(*slots)


def instantiate(pattern: TriplePattern, bindings) -> Triple | None:
    """テンプレートを基底トリプルにする。トリプルとして不正なら None"""
    grounded = substitute(pattern, bindings)
    if grounded is None:
        return None
    slots = list(grounded)
    if any(isinstance(s, Variable) for s in slots):
        return None
    if isinstance(slots[0], Literal):
        return None
    return Triple(*slots)


def _matches(store, pattern, bindings):
    grounded = substitute(pattern, bindings)
    if grounded is None:
        return []
    return store.match(grounded)


def solve(patterns, store, seed=None):
    """
    基本グラフパターンを満たす束縛をすべて列挙する。
    ストア上の一致数が最小のパターンから始め、残りは左から順に束縛を伝播させる。
    """
    patterns = list(patterns)
    if not patterns:
        return [dict(seed or {})]
    seed = dict(seed or {})
    counts = [len(_matches(store, p, seed)) for p in patterns]
    if 0 in counts:
        return []
    first = min(range(len(patterns)), key=lambda i: counts[i])
    order = [first] + [i for i in range(len(patterns)) if i != first]

    solutions = [seed]
    for index in order:
        pattern = patterns[index]
        extended = []
        for bindings in solutions:
            for _triple, found in _matches(store, pattern, bindings):
                extended.append({**bindings, **found})
        solutions = extended
        if not solutions:
            break
    return solutions


_COMPARATORS = {
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
    "=": operator.eq,
    "!=": operator.ne,
}


@dataclass(frozen=True, slots=True)
class Guard:
    """?var op 数値 の数値比較"""

    variable: str
    operator: str
    constant: Decimal

    def __post_init__(self):
        if self.operator not in _COMPARATORS:
            raise MalformedLiteral(f"unknown guard operator: {self.operator!r}")
        if not isinstance(self.constant, Decimal):
            object.__setattr__(self, "constant", Decimal(str(self.constant)))
        if not self.constant.is_finite():
            raise MalformedLiteral(f"guard constant is not finite: {self.constant}")

    def holds(self, term) -> bool:
        """数値リテラル以外に束縛されていれば TypeError"""
        if not isinstance(term, Literal) or not term.is_numeric:
            raise TypeError(f"?{self.variable} is not bound to a numeric literal")
        return _COMPARATORS[self.operator](term.numeric_value(), self.constant)

    def __str__(self):
        return f"?{self.variable} {self.operator} {self.constant}"
