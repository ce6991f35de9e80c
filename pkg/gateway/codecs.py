"""
デバイスメッセージのデコード（JSON / CSV）と MQTT トピックの解釈
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation

from .exceptions import BadTopic, DecodeError

logger = logging.getLogger(__name__)

FIELDS = ("device_id", "sensor_kind", "value", "unit", "timestamp")
TRANSPORTS = ("mqtt", "coap", "http")


def now_ms():
    return int(time.time() * 1000)


@dataclass(frozen=True)
class RawReading:
    """未加工のセンサ値"""

    device_id: str
    sensor_kind: str
    value: Decimal
    unit: str
    timestamp: int

    def __post_init__(self):
        if not self.device_id or not self.sensor_kind:
            raise DecodeError("device_id and sensor_kind must be nonempty")
        if not self.value.is_finite():
            raise DecodeError(f"value is not finite: {self.value}")
        # 観測値は xsd:double として書き込む
        if not math.isfinite(float(self.value)):
            raise DecodeError(f"value overflows a double: {self.value}")
        if self.timestamp < 0:
            raise DecodeError(f"timestamp must be >= 0: {self.timestamp}")


@dataclass(frozen=True)
class InboundMessage:
    transport: str
    route: str
    payload: bytes
    received_at: int

    def __post_init__(self):
        if self.transport not in TRANSPORTS:
            raise DecodeError(f"unknown transport: {self.transport!r}")
        if not self.payload:
            raise DecodeError("empty payload")


def _text(value, name):
    if not isinstance(value, str) or not value.strip():
        raise DecodeError(f"field {name!r} must be a nonempty string")
    return value.strip()


def _number(value, name):
    if isinstance(value, bool) or value is None:
        raise DecodeError(f"field {name!r} is not a number: {value!r}")
    try:
        # float は repr 経由にして 39.0 → Decimal('39.0') のように桁を保つ
        number = Decimal(repr(value)) if isinstance(value, float) else Decimal(str(value).strip())
    except InvalidOperation:
        raise DecodeError(f"field {name!r} is not a number: {value!r}")
    if not number.is_finite():
        raise DecodeError(f"field {name!r} is not finite: {value!r}")
    return number


def _timestamp(value, received_at):
    if value is None or value == "":
        return received_at
    number = _number(value, "timestamp")
    if number != number.to_integral_value() or number < 0:
        raise DecodeError(f"timestamp must be a nonnegative integer: {value!r}")
    return int(number)


def _from_fields(fields, received_at, defaults=None):
    if defaults:
        fields = {**defaults, **{k: v for k, v in fields.items() if v not in (None, "")}}
    missing = [name for name in FIELDS[:4] if fields.get(name) in (None, "")]
    if missing:
        raise DecodeError(f"missing field(s): {', '.join(missing)}")
    return RawReading(
        device_id=_text(fields["device_id"], "device_id"),
        sensor_kind=_text(fields["sensor_kind"], "sensor_kind"),
        value=_number(fields["value"], "value"),
        unit=_text(fields["unit"], "unit").lower(),
        timestamp=_timestamp(fields.get("timestamp"), received_at),
    )


def decode_json(payload, received_at, defaults=None):
    try:
        text = payload.decode("utf-8") if isinstance(payload, (bytes, bytearray)) else payload
        data = json.loads(text, parse_float=Decimal)
    except UnicodeDecodeError as e:
        raise DecodeError(f"payload is not UTF-8: {e}")
    except json.JSONDecodeError as e:
        raise DecodeError(f"malformed JSON: {e.msg} at line {e.lineno} column {e.colno}")
    if not isinstance(data, dict):
        raise DecodeError("JSON payload must be an object")
    return _from_fields(data, received_at, defaults)


def decode_csv_line(line, received_at):
    row = next(csv.reader(io.StringIO(line.strip())), [])
    if len(row) not in (4, 5):
        raise DecodeError(f"expected 4 or 5 CSV columns, got {len(row)}")
    return _from_fields(dict(zip(FIELDS, (cell.strip() for cell in row))), received_at)


def decode_reading(payload, fmt="json", received_at=None, route=None) -> RawReading:
    """
    ペイロードを RawReading に変換する。
    timestamp が無ければ受信時刻を使う。route（MQTT トピック）があれば照合する。
    """
    if received_at is None:
        received_at = now_ms()
    # トピックは欠けたフィールドの補完にだけ使う
    defaults = None
    if route is not None:
        device_id, sensor_kind = topic_to_route(route)
        defaults = {"device_id": device_id, "sensor_kind": sensor_kind}
    if fmt == "json":
        reading = decode_json(payload, received_at, defaults)
    elif fmt == "csv":
        try:
            text = payload.decode("utf-8") if isinstance(payload, (bytes, bytearray)) else payload
        except UnicodeDecodeError as e:
            raise DecodeError(f"payload is not UTF-8: {e}")
        reading = decode_csv_line(text, received_at)
    else:
        raise DecodeError(f"unknown payload format: {fmt!r}")

    if route is not None:
        reading = reconcile_route(reading, route)
    return reading


def topic_to_route(topic: str) -> tuple[str, str]:
    """iot/{device_id}/{sensor_kind} を分解する"""
    parts = topic.split("/")
    if len(parts) != 3 or parts[0] != "iot" or not all(parts):
        raise BadTopic(topic)
    return parts[1], parts[2]


def reconcile_route(reading: RawReading, topic: str) -> RawReading:
    """トピックと食い違う場合はペイロードを優先し、警告を残す"""
    device_id, sensor_kind = topic_to_route(topic)
    if (device_id, sensor_kind) != (reading.device_id, reading.sensor_kind):
        logger.warning(
            f"トピックとペイロードが不一致 (topic={topic}, "
            f"payload={reading.device_id}/{reading.sensor_kind})。ペイロードを採用します"
        )
    return reading


def decode_message(message: InboundMessage) -> RawReading:
    """アダプタ共通の入口。MQTT ではトピックも照合する"""
    fmt = "csv" if not message.payload.lstrip().startswith(b"{") else "json"
    route = message.route if message.transport == "mqtt" else None
    return decode_reading(message.payload, fmt, message.received_at, route)
