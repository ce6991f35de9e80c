"""
記録済みのセンサーログをパイプラインに流す

    python manage.py replay fixtures/logs/golden.csv --config fixtures/golden.toml --export out.nt
"""

from datetime import datetime
from pathlib import Path

import pytz
from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from knowledge.ntriples import serialize_triples, triple_sort_key
from services.exceptions import ReplayAborted
from services.management.helpers import EXIT_FAILURE, build_from_config, config_path, read_text
from services.replay import SPEEDS, replay_log


def format_timestamp(millis):
    """エポックミリ秒を TIME_ZONE の日時文字列にする"""
    tz = pytz.timezone(settings.TIME_ZONE)
    return datetime.fromtimestamp(millis / 1000, tz).isoformat(timespec="milliseconds")


class Command(BaseCommand):
    help = "センサーログ（CSV）をリプレイし、件数の要約を表示します"

    def add_arguments(self, parser):
        parser.add_argument("log", help="リプレイするログファイル")
        parser.add_argument("--config", help="設定ファイル（省略時は環境変数 KNOTGATE_CONFIG）")
        parser.add_argument("--speed", choices=SPEEDS, default="max", help="max は時刻を無視して即時に流す（デフォルト: max）")
        parser.add_argument("--export", metavar="PATH", help="終了後のストアを N-Triples で書き出す")
        parser.add_argument("--progress", action="store_true", help="進捗バーを標準エラーに表示")
        parser.add_argument("--verbose", action="store_true", help="最初と最後の読み取り時刻も表示（TIME_ZONE で表示）")

    def handle(self, *args, **options):
        text = read_text(options["log"])
        runtime = build_from_config(config_path(options))
        try:
            try:
                summary = replay_log(runtime, text, speed=options["speed"], progress=options["progress"])
            except ReplayAborted as e:
                raise CommandError(f"{options['log']}: {e.detail}", returncode=EXIT_FAILURE)

            for line in summary.lines():
                self.stdout.write(line)
            if options["verbose"] and summary.first_timestamp is not None:
                self.stdout.write(f"first\t{format_timestamp(summary.first_timestamp)}")
                self.stdout.write(f"last\t{format_timestamp(summary.last_timestamp)}")

            if options.get("export"):
                document = serialize_triples(sorted(runtime.store.triples(), key=triple_sort_key))
                Path(options["export"]).write_text(document, encoding="utf-8")
        finally:
            runtime.close()
