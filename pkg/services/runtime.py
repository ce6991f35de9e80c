"""
プロセス全体で共有するゲートウェイの実行時状態

ストア・センサ登録簿・ルールブック・取り込みパイプライン・配信ディスパッチャをまとめ、
管理操作（ルールパックの差し替え、ナレッジパックの読み込み等）と推論結果の通知を受け持つ。
"""

from __future__ import annotations

import logging
import threading

from django.conf import settings

from gateway.annotation import RESULT_TIME, Annotator, SensorRegistry
from gateway.codecs import now_ms
from gateway.egress import EgressDispatcher, MqttSender, MqttTopic, WebhookSender, build_envelope
from gateway.pipeline import IngestPipeline
from knowledge.inference import forward_chain
from knowledge.rules import RuleBook, parse_rulepack
from knowledge.store import Inferred, Loaded, Store
from knowledge.terms import Iri

from .compositions import CompositionRegistry, run_composition
from .exceptions import UnknownPack
from .subscriptions import SubscriptionRegistry

logger = logging.getLogger(__name__)


def knotgate_setting(name):
    return settings.KNOTGATE[name]


class Runtime:
    def __init__(self):
        self.store = Store()
        self.registry = SensorRegistry()
        self.annotator = Annotator(self.registry)
        self.rulebook = RuleBook()
        self.subscriptions = SubscriptionRegistry()
        self.compositions = CompositionRegistry()
        self.mqtt = None
        self.publish_derived = False
        self.dispatcher = EgressDispatcher(
            {
                "webhook": WebhookSender(timeout=knotgate_setting("WEBHOOK_TIMEOUT")),
                "mqtt": MqttSender(lambda: self.mqtt.client if self.mqtt is not None else None),
            },
            attempts=knotgate_setting("EGRESS_ATTEMPTS"),
            spacing_ms=knotgate_setting("EGRESS_SPACING_MS"),
        )
        self.pipeline = IngestPipeline(self.store, self.annotator, self.rulebook, notifier=self.notify_derived)
        self._notified = set()
        self._lock = threading.RLock()

    # --- 取り込み ---

    def ingest(self, reading):
        return self.pipeline.submit(reading).result()

    # --- ルールパック ---

    def activate_rulepack(self, text):
        """
        ルールパックを有効化する。同じ pack_id が有効なら、推論結果をすべて取り消して再連鎖する。
        戻り値は (pack, 置き換えたか, ChainStats)
        """
        pack = parse_rulepack(text)
        with self._lock, self.store.exclusive():
            previous = self.rulebook.activate(pack)
            if previous is not None:
                stats = self._rechain()
            else:
                stats = forward_chain(self.store, self.rulebook.packs())
                self.pipeline.counters.absorb(stats)
        self.notify_derived(stats.new_triples)
        return pack, previous is not None, stats

    def deactivate_rulepack(self, pack_id):
        with self._lock, self.store.exclusive():
            if self.rulebook.deactivate(pack_id) is None:
                raise UnknownPack(pack_id)
            stats = self._rechain()
        logger.info(f"ルールパック '{pack_id}' を無効化しました")
        self.notify_derived(stats.new_triples)
        return stats

    def _rechain(self):
        """推論結果をすべて取り消し、有効なパックで最初から連鎖し直す（ルール別の集計もここで更新）"""
        self.store.retract(Inferred)
        stats = forward_chain(self.store, self.rulebook.packs())
        self.pipeline.counters.reset(stats)
        self._forget_retracted()
        return stats

    # --- ナレッジパック ---

    def load_pack(self, document, pack_id):
        with self._lock, self.store.exclusive():
            loaded = self.store.load_pack(document, pack_id)
            stats = forward_chain(self.store, self.rulebook.packs())
            self.pipeline.counters.absorb(stats)
        self.notify_derived(stats.new_triples)
        return loaded, stats

    def unload_pack(self, pack_id):
        with self._lock, self.store.exclusive():
            if pack_id not in self.store.pack_sizes():
                raise UnknownPack(pack_id)
            removed = self.store.retract(Loaded(pack_id))
            stats = self._rechain()
        self.notify_derived(stats.new_triples)
        return removed

    # --- 通知 ---

    def notify_derived(self, new_triples, graph=None) -> int:
        """
        新しい推論トリプルを購読・サービス合成・derived/{domain} トピックへ配信する。
        (宛先, トリプル) ごとに高々1回。戻り値は積んだ配信の数。
        """
        queued = 0
        timestamp = _result_time(graph)
        for fact, rule_id in new_triples:
            observation = _observation_of(fact, graph)
            envelope = build_envelope(fact, rule_id, observation, timestamp)
            domains = self.rulebook.domains_of(rule_id)

            for subscription in self.subscriptions.matching(fact):
                if self._first_time(("sub", subscription.id, fact)):
                    self.dispatcher.submit(subscription.endpoint, envelope)
                    queued += 1

            for pipeline, bindings in self.compositions.matching(fact, domains):
                if self._first_time(("comp", pipeline.id, fact)):
                    payload = run_composition(pipeline, bindings, self.store)
                    self.dispatcher.submit(pipeline.endpoint, payload)
                    queued += 1

            if self.publish_derived and self.mqtt is not None:
                for domain in domains or ("default",):
                    if self._first_time(("mqtt", domain, fact)):
                        self.dispatcher.submit(MqttTopic(f"derived/{domain}"), envelope)
                        queued += 1
        return queued

    def _forget_retracted(self):
        """ストアから消えたトリプルの配信済み記録を捨てる（再び導出されたら再度配信する）"""
        with self._lock:
            kept = {key for key in self._notified if key[2] in self.store}
            if len(kept) < len(self._notified):
                logger.debug(f"配信済み記録を {len(self._notified) - len(kept)} 件破棄しました")
            self._notified = kept

    def _first_time(self, key):
        with self._lock:
            if key in self._notified:
                return False
            self._notified.add(key)
            return True

    # --- 集計 ---

    def stats(self):
        kinds = self.store.counts_by_kind()
        counters = self.pipeline.counters
        return {
            "store_size": len(self.store),
            "asserted": kinds.get("asserted", 0),
            "inferred": kinds.get("inferred", 0),
            "loaded": kinds.get("loaded", 0),
            "per_rule": dict(sorted(counters.per_rule.items())),
            "guard_type_errors": dict(sorted(counters.guard_type_errors.items())),
            "deliveries": self.dispatcher.counts(),
            "packs": self.store.pack_sizes(),
            "rulepacks": [pack.pack_id for pack in self.rulebook.packs()],
        }

    def close(self):
        self.pipeline.stop()
        self.dispatcher.close()


def _result_time(graph):
    if graph is not None:
        for triple in graph.triples:
            if triple.predicate == RESULT_TIME:
                return int(triple.object.lexical)
    return now_ms()


def _observation_of(fact, graph):
    if graph is not None:
        return graph.observation_iri
    if isinstance(fact.subject, Iri):
        return fact.subject
    return Iri("urn:obs:unknown")


_runtime = None
_runtime_lock = threading.Lock()


def get_runtime() -> Runtime:
    global _runtime
    with _runtime_lock:
        if _runtime is None:
            _runtime = Runtime()
        return _runtime


def set_runtime(runtime):
    global _runtime
    with _runtime_lock:
        _runtime = runtime


def reset_runtime():
    """共有状態を破棄する（テストや再起動用）"""
    global _runtime
    with _runtime_lock:
        previous, _runtime = _runtime, None
    if previous is not None:
        previous.close()
