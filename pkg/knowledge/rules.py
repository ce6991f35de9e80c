"""
共有可能なルールパック（S-LOR 形式）

    PACK slor-health DOMAIN health
    RULE fever : IF ?o rdf:type ssn:Observation . ?o ssn:observedProperty m3:BodyTemperature .
        ?o ssn:observationResult ?v FILTER ?v > 38.0 THEN ?o m3:indicates m3:Fever .
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field

from .exceptions import RuleConflict, RuleSyntaxError, SafetyError
from .grammar import TokenStream, read_guard, read_pattern
from .ntriples import escape_lexical
from .patterns import Guard, TriplePattern, Variable
from .terms import XSD_STRING, Iri, Literal, compact_iri

logger = logging.getLogger(__name__)

@dataclass(frozen=True)
class Rule:
    id: str
    body: tuple[TriplePattern, ...]
    head: tuple[TriplePattern, ...]
    guards: tuple[Guard, ...] = ()

    def body_variables(self):
        return set().union(*(p.variables() for p in self.body))


@dataclass(frozen=True)
class RulePack:
    pack_id: str
    domains: tuple[str, ...] = ()
    rules: tuple[Rule, ...] = field(default_factory=tuple)

    def rule_ids(self):
        return [rule.id for rule in self.rules]


def check_safety(rule: Rule) -> list[str]:
    """ヘッド・ガードに現れ、ボディで束縛されない変数（空なら安全）"""
    bound = rule.body_variables()
    used = set().union(*(p.variables() for p in rule.head))
    used |= {g.variable for g in rule.guards}
    return sorted(used - bound)


def _read_rule(stream: TokenStream):
    stream.expect_keyword("RULE")
    id_token = stream.expect_word("rule id")
    stream.expect_punct(":")
    stream.expect_keyword("IF")

    body = [read_pattern(stream)]
    while stream.at_punct("."):
        stream.next()
        if stream.at_keyword("FILTER", "THEN"):
            break
        body.append(read_pattern(stream))

    guards = []
    while stream.at_keyword("FILTER"):
        stream.next()
        guards.append(read_guard(stream))

    stream.expect_keyword("THEN")
    head = [read_pattern(stream)]
    stream.expect_punct(".")
    while not stream.at_end() and not stream.at_keyword("RULE"):
        head.append(read_pattern(stream))
        stream.expect_punct(".")

    return Rule(id_token.text, tuple(body), tuple(head), tuple(guards)), id_token


def parse_rulepack(text: str) -> RulePack:
    stream = TokenStream(text, RuleSyntaxError)
    stream.expect_keyword("PACK")
    pack_id = stream.expect_word("pack id").text
    domains = []
    while stream.at_keyword("DOMAIN"):
        stream.next()
        domains.append(stream.expect_word("domain tag").text)

    rules = []
    seen = set()
    while not stream.at_end():
        rule, id_token = _read_rule(stream)
        if rule.id in seen:
            raise stream.error(id_token, f"duplicate rule id {rule.id!r}")
        seen.add(rule.id)
        violations = check_safety(rule)
        if violations:
            raise SafetyError(rule.id, violations)
        rules.append(rule)
    return RulePack(pack_id, tuple(domains), tuple(rules))


def _format_slot(slot):
    if isinstance(slot, Variable):
        return str(slot)
    if isinstance(slot, Iri):
        return compact_iri(slot.value) or f"<{slot.value}>"
    if isinstance(slot, Literal):
        text = f'"{escape_lexical(slot.lexical)}"'
        if slot.datatype == XSD_STRING:
            return text
        return f"{text}^^{compact_iri(slot.datatype) or f'<{slot.datatype}>'}"
    raise ValueError(f"blank nodes cannot appear in rules: {slot!r}")


def format_pattern(pattern: TriplePattern) -> str:
    return " ".join(_format_slot(s) for s in pattern)


def _format_patterns(patterns):
    return " . ".join(format_pattern(p) for p in patterns)


def format_rulepack(pack: RulePack) -> str:
    """ルールパックを文法どおりのテキストに戻す（他のゲートウェイとの共有用）"""
    header = " ".join(["PACK", pack.pack_id] + [f"DOMAIN {d}" for d in pack.domains])
    lines = [header]
    for rule in pack.rules:
        parts = [f"RULE {rule.id} : IF {_format_patterns(rule.body)}"]
        parts += [f"FILTER {g}" for g in rule.guards]
        parts.append(f"THEN {_format_patterns(rule.head)} .")
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


class RuleBook:
    """有効なルールパックの集合。ルールIDは全パックを通して一意"""

    def __init__(self):
        self._packs: dict[str, RulePack] = {}
        self._lock = threading.Lock()

    def __len__(self):
        return len(self._packs)

    def __contains__(self, pack_id):
        return pack_id in self._packs

    def packs(self) -> list[RulePack]:
        with self._lock:
            return [self._packs[k] for k in sorted(self._packs)]

    def get(self, pack_id):
        return self._packs.get(pack_id)

    def activate(self, pack: RulePack):
        """パックを有効化する。同じ pack_id は置き換え。戻り値は置き換え前のパック"""
        with self._lock:
            for other in self._packs.values():
                if other.pack_id == pack.pack_id:
                    continue
                for rule_id in set(other.rule_ids()) & set(pack.rule_ids()):
                    raise RuleConflict(rule_id, other.pack_id)
            previous = self._packs.get(pack.pack_id)
            self._packs[pack.pack_id] = pack
        if previous is None:
            logger.info(f"ルールパック '{pack.pack_id}' を有効化しました（{len(pack.rules)}ルール）")
        else:
            logger.info(f"ルールパック '{pack.pack_id}' を置き換えました")
        return previous

    def deactivate(self, pack_id):
        with self._lock:
            return self._packs.pop(pack_id, None)

    def domains_of(self, rule_id) -> tuple[str, ...]:
        for pack in self.packs():
            if rule_id in pack.rule_ids():
                return pack.domains
        return ()

    def pack_of(self, rule_id):
        for pack in self.packs():
            if rule_id in pack.rule_ids():
                return pack
        return None
