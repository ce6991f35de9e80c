"""
serve 用の設定ファイル（TOML）の読み込みと、設定に従った実行時状態の初期化

    [http]          host, port
    [mqtt]          enabled, broker_url, client_id, publish_derived
    [coap]          enabled, host, port
    [load]          sensors, rulepacks, packs（ファイルのリスト）
    [subscriptions] files
    [compositions]  files

相対パスは設定ファイルのあるディレクトリを基準に解決する。
"""

from __future__ import annotations

import json
import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field
from pathlib import Path

from gateway.exceptions import GatewayError
from knowledge.exceptions import KnowledgeError

from .compositions import parse_composition
from .exceptions import ConfigError, ServiceError
from .runtime import Runtime
from .subscriptions import parse_subscription

logger = logging.getLogger(__name__)


@dataclass
class ServeConfig:
    path: Path | None = None
    http_host: str = "127.0.0.1"
    http_port: int = 8000
    mqtt_enabled: bool = False
    mqtt_broker_url: str = "mqtt://127.0.0.1:1883"
    mqtt_client_id: str = "knotgate"
    publish_derived: bool = False
    coap_enabled: bool = False
    coap_host: str = "127.0.0.1"
    coap_port: int = 5683
    sensors: list[Path] = field(default_factory=list)
    rulepacks: list[Path] = field(default_factory=list)
    packs: list[Path] = field(default_factory=list)
    subscriptions: list[Path] = field(default_factory=list)
    compositions: list[Path] = field(default_factory=list)


def _section(data, name, path):
    section = data.get(name, {})
    if not isinstance(section, dict):
        raise ConfigError(path, f"[{name}] must be a table")
    return section


def _value(section, key, kind, default, path, name):
    value = section.get(key, default)
    # bool は int の派生なのでポート番号に紛れ込まないようにする
    if not isinstance(value, kind) or (kind is int and isinstance(value, bool)):
        raise ConfigError(path, f"[{name}] {key} must be {kind.__name__}")
    return value


def _port(section, default, path, name):
    port = _value(section, "port", int, default, path, name)
    if not 0 <= port <= 65535:
        raise ConfigError(path, f"[{name}] port out of range: {port}")
    return port


def _files(section, key, base, path, name):
    files = section.get(key, [])
    if not isinstance(files, list) or not all(isinstance(f, str) for f in files):
        raise ConfigError(path, f"[{name}] {key} must be a list of paths")
    resolved = []
    for entry in files:
        file_path = Path(entry)
        if not file_path.is_absolute():
            file_path = base / file_path
        if not file_path.is_file():
            raise ConfigError(file_path, "file not found")
        resolved.append(file_path)
    return resolved


def load_config(path) -> ServeConfig:
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(path, "file not found")
    except (OSError, UnicodeDecodeError) as e:
        raise ConfigError(path, str(e))
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(path, f"invalid TOML: {e}")

    base = path.resolve().parent
    http = _section(data, "http", path)
    mqtt = _section(data, "mqtt", path)
    coap = _section(data, "coap", path)
    load = _section(data, "load", path)

    config = ServeConfig(
        path=path,
        http_host=_value(http, "host", str, ServeConfig.http_host, path, "http"),
        http_port=_port(http, ServeConfig.http_port, path, "http"),
        mqtt_enabled=_value(mqtt, "enabled", bool, False, path, "mqtt"),
        mqtt_broker_url=_value(mqtt, "broker_url", str, ServeConfig.mqtt_broker_url, path, "mqtt"),
        mqtt_client_id=_value(mqtt, "client_id", str, ServeConfig.mqtt_client_id, path, "mqtt"),
        publish_derived=_value(mqtt, "publish_derived", bool, False, path, "mqtt"),
        coap_enabled=_value(coap, "enabled", bool, False, path, "coap"),
        coap_host=_value(coap, "host", str, ServeConfig.coap_host, path, "coap"),
        coap_port=_port(coap, ServeConfig.coap_port, path, "coap"),
        sensors=_files(load, "sensors", base, path, "load"),
        rulepacks=_files(load, "rulepacks", base, path, "load"),
        packs=_files(load, "packs", base, path, "load"),
        subscriptions=_files(_section(data, "subscriptions", path), "files", base, path, "subscriptions"),
        compositions=_files(_section(data, "compositions", path), "files", base, path, "compositions"),
    )
    logger.info(f"設定ファイルを読み込みました: {path}")
    return config


def _definitions(file_path):
    """JSON ファイルから定義を読む（オブジェクト1つでも配列でもよい）"""
    data = json.loads(file_path.read_text(encoding="utf-8"))
    return data if isinstance(data, list) else [data]


def apply_config(runtime: Runtime, config: ServeConfig):
    """
    設定が参照するファイルを順に読み込む（センサ → ナレッジパック → ルールパック → 購読・合成）。
    失敗はファイル名付きの ConfigError にする。
    """
    current = None
    try:
        for current in config.sensors:
            runtime.registry.load_csv(current.read_text(encoding="utf-8"))
        for current in config.packs:
            runtime.load_pack(current.read_text(encoding="utf-8"), current.stem)
        for current in config.rulepacks:
            runtime.activate_rulepack(current.read_text(encoding="utf-8"))
        for current in config.subscriptions:
            for entry in _definitions(current):
                sub_id, pattern, endpoint = parse_subscription(entry)
                runtime.subscriptions.register(pattern, endpoint, sub_id)
        for current in config.compositions:
            for entry in _definitions(current):
                runtime.compositions.register(parse_composition(entry))
    except (KnowledgeError, GatewayError, ServiceError) as e:
        raise ConfigError(current, e.detail)
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ConfigError(current, str(e))
    runtime.publish_derived = config.publish_derived
    return runtime


def build_runtime(config_path=None) -> Runtime:
    """設定ファイル（省略時は空）から新しい Runtime を作る"""
    runtime = Runtime()
    if config_path:
        apply_config(runtime, load_config(config_path))
    return runtime
