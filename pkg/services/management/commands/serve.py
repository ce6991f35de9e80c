"""
ゲートウェイを起動する

    python manage.py serve --config fixtures/golden.toml

設定ファイルが参照するファイルを読み込んでから、MQTT・CoAP アダプタと HTTP API を開始する。
"""

import logging

from django.core.management.base import BaseCommand, CommandError
from django.core.servers.basehttp import get_internal_wsgi_application, run

from gateway.coap import CoapServer
from gateway.mqtt import MqttAdapter
from services.bootstrap import ServeConfig, apply_config, load_config
from services.exceptions import ConfigError
from services.management.helpers import EXIT_BIND, EXIT_USAGE, config_path
from services.runtime import Runtime, set_runtime

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = "ゲートウェイ（HTTP API と有効なアダプタ）を起動します"

    def add_arguments(self, parser):
        parser.add_argument("--config", help="設定ファイル（省略時は環境変数 KNOTGATE_CONFIG）")
        parser.add_argument("--host", help="HTTP の待ち受けアドレス（設定ファイルより優先）")
        parser.add_argument("--port", type=int, help="HTTP のポート（設定ファイルより優先）")

    def handle(self, *args, **options):
        path = config_path(options)
        runtime = Runtime()
        try:
            config = load_config(path) if path else ServeConfig()
            apply_config(runtime, config)
        except ConfigError as e:
            runtime.close()
            raise CommandError(f"設定エラー: {e.detail}", returncode=EXIT_USAGE)

        host = options.get("host") or config.http_host
        port = options.get("port") if options.get("port") is not None else config.http_port
        set_runtime(runtime)
        runtime.pipeline.start()

        adapters = []
        try:
            if config.mqtt_enabled:
                runtime.mqtt = MqttAdapter(config.mqtt_broker_url, runtime.pipeline, config.mqtt_client_id)
                adapters.append(runtime.mqtt)
                runtime.mqtt.start(timeout=10)
            if config.coap_enabled:
                coap = CoapServer(runtime.pipeline, config.coap_host, config.coap_port)
                adapters.append(coap)
                coap.start()

            self.stdout.write(f"HTTP API: http://{host}:{port}/api/v1/")
            run(host, port, get_internal_wsgi_application(), threading=True)
        except ValueError as e:
            raise CommandError(f"設定エラー: {e}", returncode=EXIT_USAGE)
        except (OSError, TimeoutError) as e:
            raise CommandError(f"起動に失敗しました: {e}", returncode=EXIT_BIND)
        except KeyboardInterrupt:
            self.stdout.write("停止します")
        finally:
            for adapter in reversed(adapters):
                adapter.stop()
            runtime.close()
            logger.info("ゲートウェイを停止しました")
