"""
services テスト共通の部品
"""

import json
from pathlib import Path

from django.conf import settings

from services.runtime import Runtime

FIXTURES = Path(settings.BASE_DIR) / "fixtures"


def fixture_text(*parts):
    return FIXTURES.joinpath(*parts).read_text(encoding="utf-8")


class RecordingSender:
    """送信内容を記録するだけの送信器（宛先, JSON）"""

    def __init__(self):
        self.sent = []

    async def send(self, address, body):
        self.sent.append((address, json.loads(body)))

    async def close(self):
        pass

    def to(self, address):
        return [payload for target, payload in self.sent if target == address]


def recording_runtime(*rulepacks, packs=()):
    """fixtures のセンサ登録を読み込み、Webhook 送信を記録に差し替えた Runtime"""
    runtime = Runtime()
    sender = RecordingSender()
    runtime.dispatcher.senders["webhook"] = sender
    runtime.registry.load_csv(fixture_text("sensors.csv"))
    for name in packs:
        runtime.load_pack(fixture_text("packs", name), Path(name).stem)
    for name in rulepacks:
        runtime.activate_rulepack(fixture_text("rulepacks", name))
    return runtime, sender
