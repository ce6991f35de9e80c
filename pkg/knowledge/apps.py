from django.apps import AppConfig


class KnowledgeConfig(AppConfig):
    name = "knowledge"
    verbose_name = "ナレッジ（トリプルストア・推論・クエリ）"
