"""
セマンティックアノテーション

センサ登録簿を使い、RawReading を SSN 風の6トリプルの観測グラフに変換する。
値は登録された正規単位に変換してから書き込む。
"""

from __future__ import annotations

import csv
import io
import logging
import threading
from collections import defaultdict
from dataclasses import dataclass
from decimal import Decimal

from knowledge.exceptions import KnowledgeError
from knowledge.terms import M3, RDF, SSN, UNIT, XSD_LONG, Iri, Triple, expand_iri, make_iri, make_numeric

from .codecs import RawReading
from .exceptions import InvalidRegistration, UnknownUnit, UnregisteredDevice, UnsupportedConversion

logger = logging.getLogger(__name__)

CELSIUS = UNIT + "DegreeCelsius"
FAHRENHEIT = UNIT + "DegreeFahrenheit"
MMHG = UNIT + "MmHg"

UNIT_CODES = frozenset({"cel", "far", "mmhg"})
CANONICAL_UNITS = frozenset({CELSIUS, FAHRENHEIT, MMHG})

NINE, FIVE, THIRTY_TWO = Decimal(9), Decimal(5), Decimal(32)

# (単位コード, 正規単位IRI) → 変換式（閉じた表）
CONVERSIONS = {
    ("cel", CELSIUS): lambda v: v,
    ("far", CELSIUS): lambda v: (v - THIRTY_TWO) * FIVE / NINE,
    ("cel", FAHRENHEIT): lambda v: v * NINE / FIVE + THIRTY_TWO,
    ("far", FAHRENHEIT): lambda v: v,
    ("mmhg", MMHG): lambda v: v,
}

RDF_TYPE = RDF.type
OBSERVATION = SSN.Observation
OBSERVED_PROPERTY = SSN.observedProperty
OBSERVATION_RESULT = SSN.observationResult
HAS_UNIT = M3.hasUnit
OBSERVED_BY = SSN.observedBy
RESULT_TIME = SSN.resultTime


def device_iri(device_id) -> Iri:
    return Iri(f"urn:dev:{device_id}")


def normalize_unit(value, source: str, target) -> Decimal:
    """単位コード source の値を正規単位 target（IRIまたはプレフィックス付き名）に変換する"""
    source = source.lower()
    target = expand_iri(target.value if isinstance(target, Iri) else target)
    if source not in UNIT_CODES:
        raise UnknownUnit(source)
    if target not in CANONICAL_UNITS:
        raise UnknownUnit(target)
    try:
        convert = CONVERSIONS[(source, target)]
    except KeyError:
        raise UnsupportedConversion(source, target)
    return convert(value if isinstance(value, Decimal) else Decimal(str(value)))


@dataclass(frozen=True)
class SensorRegistration:
    device_id: str
    observed_property: Iri
    feature_of_interest: Iri
    canonical_unit: Iri

    @classmethod
    def from_fields(cls, device_id, observed_property, feature_of_interest, canonical_unit):
        """文字列（プレフィックス付き名可）から登録を作る"""
        device_id = (device_id or "").strip()
        if not device_id:
            raise InvalidRegistration("device_id must be nonempty")
        try:
            device_iri(device_id)
            return cls(
                device_id=device_id,
                observed_property=make_iri(observed_property.strip()),
                feature_of_interest=make_iri(feature_of_interest.strip()),
                canonical_unit=make_iri(canonical_unit.strip()),
            )
        except (KnowledgeError, AttributeError) as e:
            raise InvalidRegistration(getattr(e, "detail", str(e)))

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise InvalidRegistration("registration must be a JSON object")
        fields = ("device_id", "observed_property", "feature_of_interest", "canonical_unit")
        missing = [f for f in fields if not isinstance(data.get(f), str)]
        if missing:
            raise InvalidRegistration(f"missing field(s): {', '.join(missing)}")
        return cls.from_fields(*(data[f] for f in fields))

    def as_dict(self):
        return {
            "device_id": self.device_id,
            "observed_property": self.observed_property.value,
            "feature_of_interest": self.feature_of_interest.value,
            "canonical_unit": self.canonical_unit.value,
        }


def parse_registrations(text) -> list[SensorRegistration]:
    """
    CSV（device_id,observed_property,feature_of_interest,canonical_unit）を読む。
    先頭のヘッダ行と # で始まる行は読み飛ばす。
    """
    registrations = []
    for number, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
            continue
        if number == 1 and row[0].strip() == "device_id":
            continue
        if len(row) != 4:
            raise InvalidRegistration(f"line {number}: expected 4 columns, got {len(row)}")
        try:
            registrations.append(SensorRegistration.from_fields(*row))
        except InvalidRegistration as e:
            raise InvalidRegistration(f"line {number}: {e.detail}")
    return registrations


class SensorRegistry:
    """device_id → SensorRegistration（単一ライター・複数リーダー）"""

    def __init__(self):
        self._entries: dict[str, SensorRegistration] = {}
        self._lock = threading.Lock()

    def __len__(self):
        return len(self._entries)

    def __contains__(self, device_id):
        return device_id in self._entries

    def register_sensor(self, reg: SensorRegistration):
        with self._lock:
            previous = self._entries.get(reg.device_id)
            self._entries[reg.device_id] = reg
        if previous is not None and previous != reg:
            logger.info(f"センサ登録を置き換えました: {reg.device_id}")

    def load_csv(self, text) -> int:
        registrations = parse_registrations(text)
        for reg in registrations:
            self.register_sensor(reg)
        logger.info(f"センサ登録を {len(registrations)} 件読み込みました")
        return len(registrations)

    def lookup(self, device_id) -> SensorRegistration:
        try:
            return self._entries[device_id]
        except KeyError:
            raise UnregisteredDevice(device_id)

    def all(self):
        return [self._entries[key] for key in sorted(self._entries)]


@dataclass(frozen=True)
class ObservationGraph:
    observation_iri: Iri
    triples: tuple[Triple, ...]
    device_id: str = ""
    sequence: int = 0


class Annotator:
    """
    観測IRI urn:obs:{device_id}:{sequence} を発行する。
    連番はデバイスごとに1から単調増加（失敗した読み取りは番号を消費しない）。
    """

    def __init__(self, registry: SensorRegistry):
        self.registry = registry
        self._sequences = defaultdict(int)
        self._lock = threading.Lock()

    def reset_sequences(self):
        with self._lock:
            self._sequences.clear()

    def annotate(self, reading: RawReading) -> ObservationGraph:
        reg = self.registry.lookup(reading.device_id)
        value = normalize_unit(reading.value, reading.unit, reg.canonical_unit)
        result = make_numeric(value)
        timestamp = make_numeric(reading.timestamp, XSD_LONG)

        with self._lock:
            self._sequences[reading.device_id] += 1
            sequence = self._sequences[reading.device_id]
        obs = Iri(f"urn:obs:{reading.device_id}:{sequence}")

        triples = (
            Triple(obs, RDF_TYPE, OBSERVATION),
            Triple(obs, OBSERVED_PROPERTY, reg.observed_property),
            Triple(obs, OBSERVATION_RESULT, result),
            Triple(obs, HAS_UNIT, reg.canonical_unit),
            Triple(obs, OBSERVED_BY, device_iri(reading.device_id)),
            Triple(obs, RESULT_TIME, timestamp),
        )
        return ObservationGraph(obs, triples, reading.device_id, sequence)

    def release(self, graph: ObservationGraph):
        """取り込みに失敗した観測の連番を返す（その後に別の番号が発行されていなければ）"""
        with self._lock:
            if self._sequences.get(graph.device_id) == graph.sequence:
                self._sequences[graph.device_id] -= 1
