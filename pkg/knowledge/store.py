"""
インメモリのトリプルストア

主語・述語・目的語の3つの索引を持ち、各トリプルに出自（Asserted / Inferred / Loaded）を記録する。
照合に使う索引は別名を代表元に正規化した形で持ち、挿入されたままの形も別に保持する。
別名の宣言が増減したときは、挿入されたままの形から索引を作り直す。
"""

from __future__ import annotations

import logging
import threading
from collections import Counter
from contextlib import contextmanager
from dataclasses import dataclass

from .aliases import AliasTable
from .exceptions import MalformedLiteral
from .ntriples import parse_triples
from .patterns import TriplePattern, Variable, unify
from .terms import M3, Iri, Triple

logger = logging.getLogger(__name__)

EQUIVALENT_TO = M3.equivalentTo


@dataclass(frozen=True, slots=True)
class Asserted:
    source: str

    kind = "asserted"


@dataclass(frozen=True, slots=True)
class Inferred:
    rule_id: str

    kind = "inferred"

    def __post_init__(self):
        if not self.rule_id:
            raise MalformedLiteral("rule_id must not be empty")


@dataclass(frozen=True, slots=True)
class Loaded:
    pack_id: str

    kind = "loaded"

    def __post_init__(self):
        if not self.pack_id:
            raise MalformedLiteral("pack_id must not be empty")


Provenance = Asserted | Inferred | Loaded


def _selector(selector):
    """retract の選択子を述語関数にする（クラス・出自の値・関数のいずれか）"""
    if isinstance(selector, type):
        return lambda prov: isinstance(prov, selector)
    if isinstance(selector, (Asserted, Inferred, Loaded)):
        return lambda prov: prov == selector
    return selector


class Store:
    def __init__(self):
        # 挿入されたままの形 → 出自（dict を順序付き集合として使う）
        self._raw: dict[Triple, Provenance] = {}
        # 正規化した形 → 出自（照合・列挙はこちら）
        self._triples: dict[Triple, Provenance] = {}
        self._index = ({}, {}, {})
        self._aliases = AliasTable()
        self._journals: list[list[Triple]] = []
        self._lock = threading.RLock()

    def __len__(self):
        return len(self._triples)

    def __contains__(self, triple):
        with self._lock:
            return self.canonicalize(triple) in self._triples

    def __iter__(self):
        return iter(self.triples())

    @contextmanager
    def exclusive(self):
        """書き込み（insert / retract / load_pack / 推論）と一貫した読み取りの排他区間"""
        with self._lock:
            yield self

    @contextmanager
    def atomic(self):
        """ブロック内の挿入を、例外で抜けたときにまとめて取り消す"""
        with self._lock:
            journal = []
            self._journals.append(journal)
            try:
                yield self
            except BaseException:
                self._journals.pop()
                self._undo(journal)
                raise
            self._journals.pop()
            if self._journals:
                self._journals[-1].extend(journal)

    def triples(self, selector=None) -> list[Triple]:
        with self._lock:
            if selector is None:
                return list(self._triples)
            keep = _selector(selector)
            return [t for t, prov in self._triples.items() if keep(prov)]

    def provenance(self, triple):
        with self._lock:
            return self._triples.get(self.canonicalize(triple))

    def counts_by_kind(self) -> Counter:
        with self._lock:
            return Counter(prov.kind for prov in self._triples.values())

    def pack_sizes(self) -> dict[str, int]:
        with self._lock:
            sizes = Counter(p.pack_id for p in self._triples.values() if isinstance(p, Loaded))
        return dict(sorted(sizes.items()))

    def resolve_alias(self, term):
        with self._lock:
            return self._aliases.find(term)

    def canonicalize(self, triple: Triple) -> Triple:
        # 別名宣言そのものは書き換えない（同値類の再構築に必要）
        if triple.predicate == EQUIVALENT_TO or not len(self._aliases):
            return triple
        s, p, o = (self._aliases.find(t) for t in triple)
        return Triple(s, p, o)

    def _canonical_slot(self, slot):
        if isinstance(slot, Variable):
            return slot
        return self._aliases.find(slot)

    def _add(self, triple, prov):
        self._triples[triple] = prov
        for index, term in zip(self._index, triple):
            index.setdefault(term, {})[triple] = None

    def _remove(self, triple):
        del self._triples[triple]
        for index, term in zip(self._index, triple):
            bucket = index[term]
            del bucket[triple]
            if not bucket:
                del index[term]

    def _reindex(self):
        """挿入されたままの形から正規化した索引を作り直す（先に入った出自を優先）"""
        self._triples = {}
        self._index = ({}, {}, {})
        for raw, prov in self._raw.items():
            canonical = self.canonicalize(raw)
            if canonical not in self._triples:
                self._add(canonical, prov)

    def insert(self, triple: Triple, prov) -> bool:
        with self._lock:
            if triple in self._raw:
                return False
            canonical = self.canonicalize(triple)
            if canonical in self._triples:
                if canonical == triple:
                    return False
                # 別名で重なった形も残す（別名が取り消されたら分かれて現れる）
                self._record(triple, prov)
                return False
            self._record(triple, prov)
            self._add(canonical, prov)
            return True

    def _record(self, triple, prov):
        self._raw[triple] = prov
        if self._journals:
            self._journals[-1].append(triple)

    def _undo(self, journal):
        for triple in journal:
            self._raw.pop(triple, None)
        self._rebuild_aliases()
        self._reindex()
        if journal:
            logger.info(f"失敗した処理の挿入 {len(journal)} 件を取り消しました")

    def match(self, pattern: TriplePattern):
        """パターンと単一化できる格納済みトリプルと、その束縛の組を返す"""
        with self._lock:
            if pattern.predicate != EQUIVALENT_TO and len(self._aliases):
                pattern = TriplePattern(*(self._canonical_slot(s) for s in pattern))
            candidates = None
            for index, slot in zip(self._index, pattern):
                if isinstance(slot, Variable):
                    continue
                bucket = index.get(slot)
                if bucket is None:
                    return []
                if candidates is None or len(bucket) < len(candidates):
                    candidates = bucket
            if candidates is None:
                candidates = self._triples
            results = []
            for triple in candidates:
                bindings = unify(pattern, triple)
                if bindings is not None:
                    results.append((triple, bindings))
            return results

    def retract(self, selector) -> int:
        with self._lock:
            keep = _selector(selector)
            doomed = [t for t, prov in self._raw.items() if keep(prov)]
            if not doomed:
                return 0
            for triple in doomed:
                del self._raw[triple]
            touches_aliases = any(t.predicate == EQUIVALENT_TO for t in doomed)
            if touches_aliases:
                self._rebuild_aliases()
            if touches_aliases or len(self._aliases):
                self._reindex()
            else:
                for triple in doomed:
                    self._remove(triple)
            logger.info(f"{len(doomed)}件のトリプルを取り消しました")
            return len(doomed)

    def load_pack(self, document: str, pack_id: str) -> int:
        """ナレッジパックを読み込む。構文エラー時は何も挿入しない"""
        prov = Loaded(pack_id)
        parsed = parse_triples(document)
        with self.atomic():
            aliases_changed = False
            for triple in parsed:
                if triple.predicate == EQUIVALENT_TO:
                    aliases_changed |= self._declare_alias(triple)
            loaded = sum(1 for triple in parsed if self.insert(triple, prov))
            if aliases_changed:
                self._reindex()
        logger.info(f"ナレッジパック '{pack_id}' を読み込みました（新規 {loaded} 件）")
        return loaded

    def _declare_alias(self, triple):
        if not isinstance(triple.subject, Iri) or not isinstance(triple.object, Iri):
            logger.warning(f"IRI以外の別名宣言は無視します: {triple}")
            return False
        return self._aliases.union(triple.subject, triple.object)

    def _rebuild_aliases(self):
        self._aliases.clear()
        for triple in self._raw:
            if triple.predicate == EQUIVALENT_TO:
                self._declare_alias(triple)
