"""
前向き連鎖（ナイーブ評価）による推論

各ラウンドでは、ラウンド開始時点のストアに対して全ルールを評価し、その後で結果を挿入する。
ラウンドで何も挿入されなければ不動点。
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field

from .exceptions import GuardTypeError
from .ntriples import triple_sort_key
from .patterns import instantiate, solve
from .rules import Rule
from .store import Inferred, Store
from .terms import Triple

logger = logging.getLogger(__name__)


@dataclass
class ChainStats:
    rounds: int = 0
    derived: int = 0
    per_rule: dict[str, int] = field(default_factory=dict)
    guard_type_errors: Counter = field(default_factory=Counter)
    new_triples: list[tuple[Triple, str]] = field(default_factory=list)

    def as_dict(self):
        return {
            "rounds": self.rounds,
            "derived": self.derived,
            "per_rule": dict(sorted(self.per_rule.items())),
            "guard_type_errors": dict(sorted(self.guard_type_errors.items())),
        }


def evaluate_rule(rule: Rule, store: Store, diagnostics: Counter | None = None) -> set[Triple]:
    """ガードを満たすボディの一致ごとにヘッドを基底化したトリプルの集合"""
    results = set()
    for bindings in solve(rule.body, store):
        try:
            if not all(guard.holds(bindings[guard.variable]) for guard in rule.guards):
                continue
        except TypeError:
            failed = next(g for g in rule.guards if not _is_numeric(bindings[g.variable]))
            error = GuardTypeError(rule.id, failed.variable, bindings[failed.variable])
            logger.warning(f"ガードの型エラーのため束縛をスキップ: {error.detail}")
            if diagnostics is not None:
                diagnostics[rule.id] += 1
            continue
        for template in rule.head:
            triple = instantiate(template, bindings)
            if triple is None:
                logger.warning(f"ルール '{rule.id}' のヘッドがトリプルになりません: {bindings}")
                continue
            results.add(triple)
    return results


def _is_numeric(term):
    return getattr(term, "is_numeric", False)


def forward_chain(store: Store, packs) -> ChainStats:
    """不動点まで全ルールを繰り返し適用し、新しいトリプルを Inferred(rule_id) で挿入する"""
    # パックやルールの並び順に依存しないよう、ルールID順に評価する
    rules = sorted((rule for pack in packs for rule in pack.rules), key=lambda r: r.id)
    stats = ChainStats(per_rule={rule.id: 0 for rule in rules})

    with store.exclusive():
        while True:
            stats.rounds += 1
            produced = [(rule, evaluate_rule(rule, store, stats.guard_type_errors)) for rule in rules]
            fresh = set()
            for rule, triples in produced:
                for triple in sorted(triples, key=triple_sort_key):
                    canonical = store.canonicalize(triple)
                    if store.insert(canonical, Inferred(rule.id)):
                        fresh.add(canonical)
                        stats.derived += 1
                        stats.per_rule[rule.id] += 1
                        stats.new_triples.append((canonical, rule.id))
                    elif canonical in fresh:
                        # 同じラウンドで別ルールも導出した（集合なので無害）
                        stats.per_rule[rule.id] += 1
            if not fresh:
                break

    if stats.derived:
        logger.info(f"推論完了: {stats.rounds}ラウンド、新規 {stats.derived} 件")
    return stats
