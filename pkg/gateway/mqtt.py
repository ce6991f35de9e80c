"""
MQTT アダプタ

外部ブローカーに接続して iot/# を購読し、受信したメッセージをパイプラインに渡す。
推論結果の publish にも同じ接続を使う。
"""

import logging
import threading
from urllib.parse import urlparse

import paho.mqtt.client as mqtt

from knowledge.exceptions import KnowledgeError

from .codecs import InboundMessage, decode_message, now_ms
from .exceptions import GatewayError

logger = logging.getLogger(__name__)

INGEST_TOPIC = "iot/#"
DEFAULT_PORT = 1883


def parse_broker_url(url):
    """mqtt://host[:port] → (host, port)"""
    parsed = urlparse(url if "://" in url else f"mqtt://{url}")
    if parsed.scheme not in ("mqtt", "tcp") or not parsed.hostname:
        raise ValueError(f"unsupported broker URL: {url!r}")
    return parsed.hostname, parsed.port or DEFAULT_PORT


class MqttAdapter:
    def __init__(self, broker_url, pipeline, client_id="knotgate"):
        self.host, self.port = parse_broker_url(broker_url)
        self.pipeline = pipeline
        self.client = mqtt.Client(mqtt.CallbackAPIVersion.VERSION2, client_id=client_id)
        self.client.on_connect = self.on_connect
        self.client.on_disconnect = self.on_disconnect
        self.client.on_message = self.on_message
        self.connected = threading.Event()
        self.subscribed = threading.Event()
        self.client.on_subscribe = self.on_subscribe
        self.rejected = 0

    def on_connect(self, client, userdata, flags, reason_code, properties):
        if reason_code.is_failure:
            logger.error(f"MQTTブローカーへの接続に失敗しました: {reason_code}")
            return
        logger.info(f"MQTTブローカーに接続しました: {self.host}:{self.port}")
        self.connected.set()
        client.subscribe(INGEST_TOPIC)

    def on_subscribe(self, client, userdata, mid, reason_codes, properties):
        self.subscribed.set()

    def on_disconnect(self, client, userdata, flags, reason_code, properties):
        self.connected.clear()
        self.subscribed.clear()
        logger.info(f"MQTTブローカーから切断しました: {reason_code}")

    def on_message(self, client, userdata, msg):
        try:
            message = InboundMessage("mqtt", msg.topic, msg.payload, now_ms())
            reading = decode_message(message)
        except GatewayError as e:
            logger.warning(f"MQTTメッセージを破棄しました ({msg.topic}): {e.detail}")
            self.rejected += 1
            return
        future = self.pipeline.submit(reading)
        future.add_done_callback(lambda f: self._report(msg.topic, f))

    def _report(self, topic, future):
        error = future.exception()
        if error is None:
            return
        if isinstance(error, (GatewayError, KnowledgeError)):
            logger.warning(f"MQTT経由の取り込みに失敗しました ({topic}): {error.detail}")
            self.rejected += 1
        else:
            logger.error(f"MQTT経由の取り込みで予期しないエラー ({topic})", exc_info=error)

    def publish(self, topic, payload):
        return self.client.publish(topic, payload, qos=0)

    def start(self, timeout=None):
        self.client.connect(self.host, self.port, keepalive=60)
        self.client.loop_start()
        if timeout is not None and not self.subscribed.wait(timeout):
            raise TimeoutError(f"MQTT broker {self.host}:{self.port} did not acknowledge the subscription")

    def stop(self):
        self.client.disconnect()
        self.client.loop_stop()
