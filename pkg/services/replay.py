"""
記録済みセンサーログのリプレイ

ログは decode_reading の CSV 形式で1行1件。先頭が "#" の行と空行は読み飛ばす。
観測の連番は実行ごとに1から振り直すので、同じログからは同じストアができる。
"""

from __future__ import annotations

import logging
import sys
import time
from collections import Counter
from dataclasses import dataclass, field

from tqdm import tqdm

from gateway.codecs import decode_reading
from gateway.exceptions import GatewayError
from knowledge.exceptions import KnowledgeError

from .exceptions import ReplayAborted

logger = logging.getLogger(__name__)

SPEEDS = ("max", "realtime")


@dataclass
class ReplaySummary:
    readings: int = 0
    triples: int = 0
    derived: int = 0
    per_rule: Counter = field(default_factory=Counter)
    first_timestamp: int | None = None
    last_timestamp: int | None = None

    def add(self, reading, receipt):
        self.readings += 1
        self.triples += receipt.triples_added
        self.derived += len(receipt.derived)
        self.per_rule.update(receipt.rule_ids)
        if self.first_timestamp is None:
            self.first_timestamp = reading.timestamp
        self.last_timestamp = reading.timestamp

    def as_dict(self):
        return {
            "readings": self.readings,
            "triples": self.triples,
            "derived": self.derived,
            "per_rule": dict(sorted(self.per_rule.items())),
        }

    def lines(self):
        """機械的に読める安定した出力（タイムスタンプは含めない）"""
        out = [f"readings\t{self.readings}", f"triples\t{self.triples}", f"derived\t{self.derived}"]
        out += [f"rule\t{rule_id}\t{count}" for rule_id, count in sorted(self.per_rule.items())]
        return out


def data_lines(text):
    """(行番号, 行) を返す。コメントと空行は除く"""
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped and not stripped.startswith("#"):
            yield number, stripped


def replay_log(runtime, text, speed="max", progress=False) -> ReplaySummary:
    """
    ログの各行を順に取り込む。
    realtime では行のタイムスタンプの差だけ待つ。timestamp の無い行は直前の行の値を使う（先頭なら 0）。
    """
    if speed not in SPEEDS:
        raise ValueError(f"speed must be one of {', '.join(SPEEDS)}")
    runtime.annotator.reset_sequences()
    summary = ReplaySummary()
    entries = list(data_lines(text))
    previous = None

    for number, line in tqdm(entries, desc="replay", unit="件", file=sys.stderr, disable=not progress):
        fallback = previous if previous is not None else 0
        try:
            reading = decode_reading(line, "csv", received_at=fallback)
            if speed == "realtime" and previous is not None and reading.timestamp > previous:
                time.sleep((reading.timestamp - previous) / 1000)
            receipt = runtime.pipeline.ingest(reading)
        except (GatewayError, KnowledgeError) as e:
            logger.error(f"リプレイを中断しました（{number}行目）: {e.detail}")
            raise ReplayAborted(number, e.detail)
        previous = reading.timestamp
        summary.add(reading, receipt)

    logger.info(f"リプレイ完了: {summary.readings}件, 推論 {summary.derived}件")
    return summary
