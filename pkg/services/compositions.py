"""
サービス合成パイプライン

推論トリプルがトリガーに単一化されたら、その束縛を使って検索クエリを実行し、
テンプレートに埋め込んだペイロードを配信先に送る（例: 発熱 → 家庭療法の提案）。
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass

from gateway.egress import parse_target
from knowledge.patterns import TriplePattern, unify
from knowledge.query import Query, evaluate_query, parse_pattern, parse_query
from knowledge.rules import format_pattern
from knowledge.terms import compact_term

from .exceptions import InvalidComposition

_WHOLE_RE = re.compile(r"^\{([A-Za-z0-9_]+)\}$")
_PLACEHOLDER_RE = re.compile(r"\{([A-Za-z0-9_]+)\}")


def placeholders(template):
    if isinstance(template, dict):
        return set().union(set(), *(placeholders(v) for v in template.values()))
    if isinstance(template, list):
        return set().union(set(), *(placeholders(v) for v in template))
    if isinstance(template, str):
        return set(_PLACEHOLDER_RE.findall(template))
    return set()


@dataclass(frozen=True)
class CompositionPipeline:
    id: str
    trigger: TriplePattern
    lookup_text: str
    lookup: Query
    template: object
    endpoint: object
    domain: str | None = None

    def as_dict(self):
        return {
            "id": self.id,
            "trigger": format_pattern(self.trigger),
            "lookup": self.lookup_text,
            "template": self.template,
            "endpoint": self.endpoint.as_dict(),
            "domain": self.domain,
        }


def parse_composition(data) -> CompositionPipeline:
    """
    {"id", "trigger", "lookup", "template", "endpoint", "domain"?} を検証して作る。
    テンプレートの解決失敗は登録時のエラーにする（実行時には起こさない）。
    """
    if not isinstance(data, dict):
        raise InvalidComposition("composition must be a JSON object")
    for key in ("id", "trigger", "lookup"):
        if not isinstance(data.get(key), str) or not data[key]:
            raise InvalidComposition(f"{key} must be a nonempty string")
    if "template" not in data:
        raise InvalidComposition("template is required")
    domain = data.get("domain")
    if domain is not None and (not isinstance(domain, str) or not domain):
        raise InvalidComposition("domain must be a nonempty string")

    trigger = parse_pattern(data["trigger"])
    lookup = parse_query(data["lookup"], bound=trigger.variables())
    unresolved = placeholders(data["template"]) - trigger.variables() - set(lookup.select)
    if unresolved:
        names = ", ".join(sorted(unresolved))
        raise InvalidComposition(f"template placeholder(s) {names} are bound by neither trigger nor lookup")
    return CompositionPipeline(
        id=data["id"],
        trigger=trigger,
        lookup_text=data["lookup"],
        lookup=lookup,
        template=data["template"],
        endpoint=parse_target(data.get("endpoint")),
        domain=domain,
    )


def render_template(template, bindings, table):
    """
    値がちょうど {var} なら、トリガー変数は単一の項、検索列は JSON 配列になる。
    文字列中に埋め込まれた {var} は項の表示形で置き換える。
    """
    columns = {name: [compact_term(row[i]) for row in table.rows] for i, name in enumerate(table.columns)}

    def single(name):
        if name in bindings:
            return compact_term(bindings[name])
        return ", ".join(columns[name])

    def render(value):
        if isinstance(value, dict):
            return {k: render(v) for k, v in value.items()}
        if isinstance(value, list):
            return [render(v) for v in value]
        if isinstance(value, str):
            whole = _WHOLE_RE.match(value)
            if whole:
                name = whole.group(1)
                return single(name) if name in bindings else columns[name]
            return _PLACEHOLDER_RE.sub(lambda m: single(m.group(1)), value)
        return value

    return render(template)


def run_composition(pipeline: CompositionPipeline, bindings, store):
    """トリガーの束縛を種にして検索し、ペイロードを組み立てる（結果が空でも提案は []）"""
    table = evaluate_query(pipeline.lookup, store, seed=bindings)
    return render_template(pipeline.template, bindings, table)


class CompositionRegistry:
    def __init__(self):
        self._entries: dict[str, CompositionPipeline] = {}
        self._lock = threading.Lock()

    def __len__(self):
        return len(self._entries)

    def register(self, pipeline: CompositionPipeline):
        with self._lock:
            if pipeline.id in self._entries:
                raise InvalidComposition(f"duplicate composition id {pipeline.id!r}")
            self._entries[pipeline.id] = pipeline
        return pipeline

    def all(self):
        return list(self._entries.values())

    def matching(self, fact, domains=()):
        """(pipeline, bindings) の一覧。ドメイン指定のあるものは推論元パックのドメインに含まれる時だけ"""
        found = []
        for pipeline in self.all():
            if pipeline.domain is not None and pipeline.domain not in domains:
                continue
            bindings = unify(pipeline.trigger, fact)
            if bindings is not None:
                found.append((pipeline, bindings))
        return found
