"""
HTTP API（/api/v1/）

レスポンス本文は対応するモジュール操作の結果をそのまま直列化したもの。
エラーはすべて {error, detail, position?} の JSON で返す。
"""

import functools
import json
import logging

from django.http import HttpResponse, JsonResponse
from django.views.decorators.csrf import csrf_exempt
from django.views.decorators.http import require_http_methods

from gateway.annotation import SensorRegistration
from gateway.codecs import decode_reading
from gateway.exceptions import GatewayError, UnknownUnit, UnregisteredDevice, UnsupportedConversion
from knowledge.exceptions import KnowledgeError
from knowledge.query import evaluate_query, parse_query
from knowledge.rules import format_rulepack

from .compositions import parse_composition
from .exceptions import BadRequest, ServiceError, UnknownPack
from .runtime import get_runtime
from .subscriptions import parse_subscription

logger = logging.getLogger(__name__)


def status_for(error):
    if isinstance(error, (UnregisteredDevice, UnknownPack)):
        return 404
    if isinstance(error, (UnknownUnit, UnsupportedConversion)):
        return 422
    return 400


def api_view(methods):
    """許可メソッドの制限、CSRF 除外、例外から JSON エラー応答への変換をまとめて行う"""

    def decorator(view):
        @csrf_exempt
        @require_http_methods(methods)
        @functools.wraps(view)
        def wrapper(request, *args, **kwargs):
            try:
                return view(request, *args, **kwargs)
            except (KnowledgeError, GatewayError, ServiceError) as e:
                logger.warning(f"{request.method} {request.path}: {e.error}: {e.detail}")
                return JsonResponse(e.as_dict(), status=status_for(e))
            except Exception:
                logger.error(f"{request.method} {request.path} で予期しないエラー", exc_info=True)
                return JsonResponse({"error": "InternalError", "detail": "internal error"}, status=500)

        return wrapper

    return decorator


def _text_body(request):
    try:
        return request.body.decode("utf-8")
    except UnicodeDecodeError:
        raise BadRequest("request body is not UTF-8")


def _json_body(request):
    try:
        return json.loads(_text_body(request))
    except json.JSONDecodeError as e:
        raise BadRequest(f"malformed JSON: {e.msg}")


@api_view(["POST"])
def observations(request):
    """観測の取り込み（202 で IngestReceipt を返す）"""
    reading = decode_reading(request.body, "json")
    receipt = get_runtime().ingest(reading)
    return JsonResponse(receipt.as_dict(), status=202)


@api_view(["GET"])
def query(request):
    text = request.GET.get("q")
    if not text:
        raise BadRequest("query parameter 'q' is required")
    table = evaluate_query(parse_query(text), get_runtime().store)
    return JsonResponse(table.as_dict())


@api_view(["GET", "POST"])
def sensors(request):
    """センサ登録。CSV（text/csv）または JSON のオブジェクト／配列を受け付ける"""
    registry = get_runtime().registry
    if request.method == "GET":
        return JsonResponse({"sensors": [reg.as_dict() for reg in registry.all()]})

    if request.content_type == "text/csv":
        count = registry.load_csv(_text_body(request))
    else:
        data = _json_body(request)
        entries = data if isinstance(data, list) else [data]
        registrations = [SensorRegistration.from_dict(entry) for entry in entries]
        for reg in registrations:
            registry.register_sensor(reg)
        count = len(registrations)
    return JsonResponse({"registered": count}, status=201)


@api_view(["GET", "POST"])
def rulepacks(request):
    runtime = get_runtime()
    if request.method == "GET":
        domain = request.GET.get("domain")
        packs = [
            {"pack_id": pack.pack_id, "domains": list(pack.domains), "rules": pack.rule_ids()}
            for pack in runtime.rulebook.packs()
            if domain is None or domain in pack.domains
        ]
        return JsonResponse({"rulepacks": packs})

    pack, replaced, stats = runtime.activate_rulepack(_text_body(request))
    body = {"pack_id": pack.pack_id, "replaced": replaced, "rules": pack.rule_ids(), **stats.as_dict()}
    return JsonResponse(body, status=200 if replaced else 201)


@api_view(["GET", "DELETE"])
def rulepack_detail(request, pack_id):
    runtime = get_runtime()
    if request.method == "GET":
        pack = runtime.rulebook.get(pack_id)
        if pack is None:
            raise UnknownPack(pack_id)
        return HttpResponse(format_rulepack(pack), content_type="text/plain; charset=utf-8")

    stats = runtime.deactivate_rulepack(pack_id)
    return JsonResponse({"pack_id": pack_id, **stats.as_dict()})


@api_view(["GET", "POST"])
def packs(request):
    """ナレッジパック。POST は ?id= にパックIDを指定する"""
    runtime = get_runtime()
    if request.method == "GET":
        return JsonResponse({"packs": runtime.store.pack_sizes()})

    pack_id = request.GET.get("id")
    if not pack_id:
        raise BadRequest("query parameter 'id' is required")
    loaded, stats = runtime.load_pack(_text_body(request), pack_id)
    return JsonResponse({"pack_id": pack_id, "loaded": loaded, **stats.as_dict()}, status=201)


@api_view(["DELETE"])
def pack_detail(request, pack_id):
    removed = get_runtime().unload_pack(pack_id)
    return JsonResponse({"pack_id": pack_id, "removed": removed})


@api_view(["GET", "POST"])
def subscriptions(request):
    registry = get_runtime().subscriptions
    if request.method == "GET":
        return JsonResponse({"subscriptions": [s.as_dict() for s in registry.all()]})

    sub_id, pattern, endpoint = parse_subscription(_json_body(request))
    subscription = registry.register(pattern, endpoint, sub_id)
    return JsonResponse({"id": subscription.id}, status=201)


@api_view(["GET", "POST"])
def compositions(request):
    registry = get_runtime().compositions
    if request.method == "GET":
        return JsonResponse({"compositions": [c.as_dict() for c in registry.all()]})

    pipeline = registry.register(parse_composition(_json_body(request)))
    return JsonResponse({"id": pipeline.id}, status=201)


@api_view(["GET"])
def stats(request):
    return JsonResponse(get_runtime().stats())
