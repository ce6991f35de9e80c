"""
取り込みパイプライン

アノテーション → ストアへの挿入（Asserted）→ 有効なルールパックで前向き連鎖 → 通知、を順に実行する。
各アダプタは並行して submit し、パイプラインは1本のキューを逐次に消費する（ストアの唯一の書き手）。
"""

from __future__ import annotations

import logging
import queue
import threading
from collections import Counter
from concurrent.futures import Future
from dataclasses import dataclass, field

from knowledge.inference import forward_chain
from knowledge.ntriples import format_triple
from knowledge.store import Asserted

from .annotation import Annotator, ObservationGraph
from .codecs import RawReading

logger = logging.getLogger(__name__)

_STOP = object()


@dataclass(frozen=True)
class IngestReceipt:
    observation_iri: object
    triples_added: int
    derived: tuple = ()
    rule_ids: tuple = ()
    notifications_queued: int = 0

    def as_dict(self):
        return {
            "observation_iri": self.observation_iri.value,
            "triples_added": self.triples_added,
            "derived": [format_triple(t) for t in self.derived],
            "notifications_queued": self.notifications_queued,
        }


@dataclass
class PipelineCounters:
    """最後の全体再連鎖からの累計"""

    readings: int = 0
    triples: int = 0
    derived: int = 0
    per_rule: Counter = field(default_factory=Counter)
    guard_type_errors: Counter = field(default_factory=Counter)

    def absorb(self, stats):
        self.derived += stats.derived
        self.per_rule.update(stats.per_rule)
        self.guard_type_errors.update(stats.guard_type_errors)

    def reset(self, stats=None):
        self.per_rule = Counter()
        self.guard_type_errors = Counter()
        if stats is not None:
            self.per_rule.update(stats.per_rule)
            self.guard_type_errors.update(stats.guard_type_errors)


class IngestPipeline:
    """
    notifier は (new_triples, graph) を受け取り、キューに積んだ通知数を返す呼び出し可能オブジェクト。
    start() していなければ submit はその場で実行する（リプレイやテスト用）。
    """

    def __init__(self, store, annotator: Annotator, rulebook, notifier=None):
        self.store = store
        self.annotator = annotator
        self.rulebook = rulebook
        self.notifier = notifier
        self.counters = PipelineCounters()
        self._queue = queue.Queue()
        self._worker = None

    def ingest(self, reading: RawReading) -> IngestReceipt:
        with self.store.exclusive():
            # 失敗し得る処理（登録確認・単位変換）は挿入より前に終える
            graph = self.annotator.annotate(reading)
            source = f"urn:dev:{reading.device_id}"
            try:
                # 連鎖が途中で失敗したら観測ごと取り消す
                with self.store.atomic():
                    added = sum(1 for triple in graph.triples if self.store.insert(triple, Asserted(source)))
                    stats = forward_chain(self.store, self.rulebook.packs())
            except Exception:
                self.annotator.release(graph)
                raise
            self.counters.readings += 1
            self.counters.triples += added
            self.counters.absorb(stats)

        queued = self._notify(stats.new_triples, graph)
        receipt = IngestReceipt(
            observation_iri=graph.observation_iri,
            triples_added=added,
            derived=tuple(t for t, _ in stats.new_triples),
            rule_ids=tuple(rule_id for _, rule_id in stats.new_triples),
            notifications_queued=queued,
        )
        logger.info(f"取り込み: {reading.device_id} → {graph.observation_iri} (推論 {len(receipt.derived)} 件)")
        return receipt

    def _notify(self, new_triples, graph: ObservationGraph):
        if self.notifier is None or not new_triples:
            return 0
        try:
            return self.notifier(new_triples, graph)
        except Exception:
            # コミット済みの取り込みは通知側の失敗で取り消さない
            logger.error("通知の登録に失敗しました", exc_info=True)
            return 0

    def submit(self, reading: RawReading) -> Future:
        """取り込みを依頼し、IngestReceipt を返す Future を受け取る"""
        future = Future()
        if self._worker is None:
            self._run(reading, future)
        else:
            self._queue.put((reading, future))
        return future

    def _run(self, reading, future):
        if not future.set_running_or_notify_cancel():
            return
        try:
            future.set_result(self.ingest(reading))
        except Exception as e:
            future.set_exception(e)

    def _consume(self):
        while True:
            item = self._queue.get()
            try:
                if item is _STOP:
                    return
                self._run(*item)
            finally:
                self._queue.task_done()

    @property
    def running(self):
        return self._worker is not None

    def start(self):
        if self._worker is not None:
            return
        self._worker = threading.Thread(target=self._consume, name="knotgate-ingest", daemon=True)
        self._worker.start()
        logger.info("取り込みパイプラインを開始しました")

    def join(self):
        """キューに積まれた取り込みがすべて終わるまで待つ"""
        self._queue.join()

    def stop(self):
        if self._worker is None:
            return
        self._queue.put(_STOP)
        self._worker.join()
        self._worker = None
        logger.info("取り込みパイプラインを停止しました")
