"""
ルールパック（.rules）・ナレッジパック（.nt）の構文と安全性を検査する

終了コード: 0 すべて正常 / 1 検査失敗 / 2 ファイルが読めない
"""

import json

from django.core.management.base import BaseCommand, CommandError

from knowledge.exceptions import KnowledgeError
from knowledge.ntriples import parse_triples
from knowledge.rules import parse_rulepack
from services.management.helpers import EXIT_FAILURE, read_text


def validate_text(path, text):
    """検査結果の説明を返す。失敗時は KnowledgeError"""
    if str(path).endswith(".nt"):
        return f"{len(parse_triples(text))} triples"
    pack = parse_rulepack(text)
    return f"pack {pack.pack_id}: {len(pack.rules)} rules"


class Command(BaseCommand):
    help = "ルールパック・ナレッジパックを検査します"

    def add_arguments(self, parser):
        parser.add_argument("paths", nargs="+", help="検査するファイル")

    def handle(self, *args, **options):
        failures = 0
        for path in options["paths"]:
            text = read_text(path)
            try:
                report = validate_text(path, text)
            except KnowledgeError as e:
                failures += 1
                self.stderr.write(f"NG\t{path}\t{json.dumps(e.as_dict(), ensure_ascii=False)}")
                continue
            self.stdout.write(f"OK\t{path}\t{report}")
        if failures:
            raise CommandError(f"{failures} file(s) failed validation", returncode=EXIT_FAILURE)
