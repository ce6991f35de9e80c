"""
推論結果の配信（MQTT トピック / Webhook）

配信は専用スレッドの asyncio ループで行い、宛先ごとにロックを取って投入順を保つ。
失敗しても例外は投げず、DeliveryRecord に記録する。
"""

from __future__ import annotations

import asyncio
import json
import logging
import threading
import time
from collections import Counter
from dataclasses import dataclass, field
from urllib.parse import urlparse

import aiohttp
import paho.mqtt.client as mqtt

from knowledge.ntriples import format_triple

from .exceptions import InvalidTarget

logger = logging.getLogger(__name__)

DEFAULT_ATTEMPTS = 3
DEFAULT_SPACING_MS = 200
DEFAULT_WEBHOOK_TIMEOUT = 5


@dataclass(frozen=True)
class MqttTopic:
    topic: str
    kind = "mqtt"

    def __post_init__(self):
        if not isinstance(self.topic, str) or not self.topic:
            raise InvalidTarget("MQTT topic must be nonempty")
        if any(ch in self.topic for ch in "+#\x00"):
            raise InvalidTarget(f"MQTT topic must not contain wildcards: {self.topic!r}")

    @property
    def address(self):
        return self.topic

    def as_dict(self):
        return {"mqtt": self.topic}


@dataclass(frozen=True)
class Webhook:
    url: str
    kind = "webhook"

    def __post_init__(self):
        parsed = urlparse(self.url) if isinstance(self.url, str) else None
        if parsed is None or parsed.scheme not in ("http", "https") or not parsed.netloc:
            raise InvalidTarget(f"webhook URL must be an absolute http(s) URL: {self.url!r}")

    @property
    def address(self):
        return self.url

    def as_dict(self):
        return {"webhook": self.url}


def parse_target(data):
    """{"mqtt": topic} または {"webhook": url} を EgressTarget にする"""
    if not isinstance(data, dict) or len(data) != 1:
        raise InvalidTarget('endpoint must be {"mqtt": topic} or {"webhook": url}')
    (kind, address), = data.items()
    if kind == "mqtt":
        return MqttTopic(address)
    if kind == "webhook":
        return Webhook(address)
    raise InvalidTarget(f"unknown endpoint kind: {kind!r}")


@dataclass
class DeliveryRecord:
    target: object
    ok: bool
    attempts: int
    error: str | None = None
    finished_at: int = field(default_factory=lambda: int(time.time() * 1000))

    def as_dict(self):
        return {
            "target": self.target.as_dict(),
            "ok": self.ok,
            "attempts": self.attempts,
            "error": self.error,
        }


def build_envelope(fact, rule_id, observation_iri, timestamp) -> dict:
    return {
        "triple": format_triple(fact),
        "rule_id": rule_id,
        "observation_iri": observation_iri.value if hasattr(observation_iri, "value") else str(observation_iri),
        "timestamp": int(timestamp),
    }


def encode_payload(payload) -> bytes:
    return json.dumps(payload, ensure_ascii=False, separators=(",", ":")).encode("utf-8")


class DeliveryError(Exception):
    pass


class WebhookSender:
    """aiohttp で JSON を POST する。2xx 以外は失敗"""

    def __init__(self, timeout=DEFAULT_WEBHOOK_TIMEOUT):
        self.timeout = aiohttp.ClientTimeout(total=timeout)
        self._session = None

    async def send(self, url, body: bytes):
        if self._session is None or self._session.closed:
            self._session = aiohttp.ClientSession(timeout=self.timeout)
        async with self._session.post(url, data=body, headers={"Content-Type": "application/json"}) as response:
            if not 200 <= response.status < 300:
                raise DeliveryError(f"HTTP {response.status}")

    async def close(self):
        if self._session is not None and not self._session.closed:
            await self._session.close()


class MqttSender:
    """接続済みの paho クライアントで QoS 0 publish する"""

    def __init__(self, client_provider):
        self.client_provider = client_provider

    async def send(self, topic, body: bytes):
        client = self.client_provider()
        if client is None:
            raise DeliveryError("no MQTT connection")
        info = client.publish(topic, body, qos=0)
        if info.rc != mqtt.MQTT_ERR_SUCCESS:
            raise DeliveryError(f"MQTT publish failed: {mqtt.error_string(info.rc)}")

    async def close(self):
        pass


async def deliver(target, body: bytes, senders, attempts=DEFAULT_ATTEMPTS, spacing_ms=DEFAULT_SPACING_MS):
    """最大 attempts 回、spacing_ms 間隔で再試行する"""
    sender = senders.get(target.kind)
    last_error = None
    for attempt in range(1, attempts + 1):
        try:
            if sender is None:
                raise DeliveryError(f"no sender for {target.kind}")
            await sender.send(target.address, body)
            return DeliveryRecord(target, True, attempt)
        except Exception as e:
            last_error = str(e) or type(e).__name__
            logger.debug(f"配信失敗 ({attempt}/{attempts}) {target.address}: {last_error}")
            if attempt < attempts:
                await asyncio.sleep(spacing_ms / 1000)
    logger.error(f"配信を断念しました {target.address}: {last_error}")
    return DeliveryRecord(target, False, attempts, last_error)


class EgressDispatcher:
    def __init__(self, senders=None, attempts=DEFAULT_ATTEMPTS, spacing_ms=DEFAULT_SPACING_MS):
        self.senders = senders if senders is not None else {"webhook": WebhookSender()}
        self.attempts = attempts
        self.spacing_ms = spacing_ms
        # 完了した配信の件数（結果そのものは Future の呼び出し側が受け取る）
        self.delivered = Counter()
        self._pending = set()
        self._lock = threading.Lock()
        self._target_locks = {}
        self._loop = None
        self._thread = None

    def _ensure_loop(self):
        with self._lock:
            if self._loop is None:
                self._loop = asyncio.new_event_loop()
                self._thread = threading.Thread(target=self._loop.run_forever, name="knotgate-egress", daemon=True)
                self._thread.start()
            return self._loop

    async def _deliver_in_order(self, target, body):
        lock = self._target_locks.setdefault(target, asyncio.Lock())
        async with lock:
            return await deliver(target, body, self.senders, self.attempts, self.spacing_ms)

    def submit(self, target, payload):
        """配信をループに積み、DeliveryRecord を返す concurrent.futures.Future を返す"""
        body = payload if isinstance(payload, bytes) else encode_payload(payload)
        future = asyncio.run_coroutine_threadsafe(self._deliver_in_order(target, body), self._ensure_loop())
        with self._lock:
            self._pending.add(future)
        future.add_done_callback(self._record)
        return future

    def _record(self, future):
        with self._lock:
            self._pending.discard(future)
            if not future.cancelled() and future.exception() is None:
                self.delivered["ok" if future.result().ok else "failed"] += 1

    def counts(self):
        with self._lock:
            return {"ok": self.delivered["ok"], "failed": self.delivered["failed"]}

    def drain(self, timeout=None):
        """投入済みの配信がすべて終わるまで待つ"""
        deadline = None if timeout is None else time.monotonic() + timeout
        while True:
            with self._lock:
                pending = list(self._pending)
            if not pending:
                return True
            for future in pending:
                remaining = None if deadline is None else max(0, deadline - time.monotonic())
                try:
                    future.result(remaining)
                except Exception:
                    if deadline is not None and time.monotonic() >= deadline:
                        return False

    def close(self):
        if self._loop is None:
            return
        self.drain(timeout=10)

        async def shutdown():
            for sender in self.senders.values():
                if sender is not None:
                    await sender.close()

        asyncio.run_coroutine_threadsafe(shutdown(), self._loop).result(5)
        self._loop.call_soon_threadsafe(self._loop.stop)
        self._thread.join(5)
        self._loop.close()
        self._loop = None
        self._thread = None


def bridge_publish(fact, target, dispatcher: EgressDispatcher, rule_id, observation_iri, timestamp) -> DeliveryRecord:
    """1件の推論結果をエンベロープにして配信し、結果を待って返す"""
    envelope = build_envelope(fact, rule_id, observation_iri, timestamp)
    return dispatcher.submit(target, envelope).result()
