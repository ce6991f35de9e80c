"""
ストアを N-Triples で書き出す（並びは直列化表現の順で固定）

    python manage.py export out.nt --config fixtures/golden.toml --replay fixtures/logs/golden.csv
"""

from pathlib import Path

from django.core.management.base import BaseCommand

from knowledge.ntriples import serialize_triples, triple_sort_key
from services.management.helpers import add_store_arguments, prepare_runtime


class Command(BaseCommand):
    help = "ストアの内容を N-Triples で書き出します"

    def add_arguments(self, parser):
        parser.add_argument("path", nargs="?", default="-", help="出力先（省略時または - は標準出力）")
        add_store_arguments(parser)

    def handle(self, *args, **options):
        runtime = prepare_runtime(options)
        try:
            document = serialize_triples(sorted(runtime.store.triples(), key=triple_sort_key))
        finally:
            runtime.close()

        if options["path"] == "-":
            self.stdout.write(document, ending="")
        else:
            Path(options["path"]).write_text(document, encoding="utf-8")
