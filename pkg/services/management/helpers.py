"""
管理コマンド共通の処理（設定ファイルの解決、ストアの準備、終了コード）
"""

from pathlib import Path

from django.conf import settings
from django.core.management.base import CommandError

from ..bootstrap import apply_config, load_config
from ..exceptions import ConfigError, ReplayAborted
from ..replay import replay_log
from ..runtime import Runtime

EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_BIND = 3


def add_store_arguments(parser):
    parser.add_argument("--config", help="設定ファイル（省略時は環境変数 KNOTGATE_CONFIG）")
    parser.add_argument(
        "--replay", action="append", default=[], metavar="LOG", help="実行前に取り込むリプレイログ（複数指定可）"
    )


def config_path(options):
    return options.get("config") or settings.KNOTGATE["CONFIG"] or None


def read_text(path):
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise CommandError(f"{path}: {e}", returncode=EXIT_USAGE)


def build_from_config(path) -> Runtime:
    runtime = Runtime()
    if path:
        try:
            apply_config(runtime, load_config(path))
        except ConfigError as e:
            runtime.close()
            raise CommandError(f"設定エラー: {e.detail}", returncode=EXIT_USAGE)
    return runtime


def prepare_runtime(options) -> Runtime:
    """設定を読み込み、--replay のログを順に取り込んだ Runtime を返す"""
    runtime = build_from_config(config_path(options))
    for log in options.get("replay") or []:
        try:
            replay_log(runtime, read_text(log))
        except ReplayAborted as e:
            runtime.close()
            raise CommandError(f"{log}: {e.detail}", returncode=EXIT_FAILURE)
        except CommandError:
            runtime.close()
            raise
    return runtime
