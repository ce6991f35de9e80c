"""
ストアに対してクエリを1回実行する

    python manage.py query "SELECT ?r WHERE { m3:Fever m3:hasRemedy ?r }" --config fixtures/golden.toml
"""

import json

from django.core.management.base import BaseCommand, CommandError
from tabulate import tabulate

from knowledge.exceptions import KnowledgeError
from knowledge.ntriples import format_term
from knowledge.query import evaluate_query, parse_query
from services.management.helpers import EXIT_FAILURE, add_store_arguments, prepare_runtime


class Command(BaseCommand):
    help = "SELECT クエリを実行して結果を表示します"

    def add_arguments(self, parser):
        parser.add_argument("query", help="クエリ文字列")
        parser.add_argument("-f", "--format", choices=["table", "json"], default="table", help="出力形式（デフォルト: table）")
        add_store_arguments(parser)

    def handle(self, *args, **options):
        try:
            query = parse_query(options["query"])
        except KnowledgeError as e:
            raise CommandError(json.dumps(e.as_dict(), ensure_ascii=False), returncode=EXIT_FAILURE)

        runtime = prepare_runtime(options)
        try:
            table = evaluate_query(query, runtime.store)
        finally:
            runtime.close()

        if options["format"] == "json":
            self.stdout.write(json.dumps(table.as_dict(), ensure_ascii=False))
            return
        rows = [[format_term(term) for term in row] for row in table.rows]
        self.stdout.write(tabulate(rows, headers=[f"?{name}" for name in table.columns], tablefmt="simple"))
