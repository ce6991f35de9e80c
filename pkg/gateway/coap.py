"""
CoAP アダプタ（サーバーのみ）

デバイスは coap://host/ingest に JSON を POST する。応答は IngestReceipt の JSON。
"""

import asyncio
import json
import logging
import threading

import aiocoap
import aiocoap.resource as resource
from aiocoap.numbers.codes import Code

from knowledge.exceptions import KnowledgeError

from .codecs import InboundMessage, decode_message, now_ms
from .exceptions import DecodeError, GatewayError, UnknownUnit, UnregisteredDevice, UnsupportedConversion

logger = logging.getLogger(__name__)

DEFAULT_PORT = 5683


def _json_response(code, body):
    return aiocoap.Message(code=code, payload=json.dumps(body).encode("utf-8"))


def error_code(error):
    if isinstance(error, DecodeError):
        return Code.BAD_REQUEST
    if isinstance(error, UnregisteredDevice):
        return Code.NOT_FOUND
    if isinstance(error, (UnknownUnit, UnsupportedConversion)):
        return Code.UNPROCESSABLE_ENTITY
    return Code.BAD_REQUEST


class IngestResource(resource.Resource):
    def __init__(self, pipeline):
        super().__init__()
        self.pipeline = pipeline

    async def render_post(self, request):
        try:
            reading = decode_message(InboundMessage("coap", "/ingest", request.payload, now_ms()))
            receipt = await asyncio.wrap_future(self.pipeline.submit(reading))
        except (GatewayError, KnowledgeError) as e:
            logger.warning(f"CoAP経由の取り込みを拒否しました: {e.detail}")
            return _json_response(error_code(e), e.as_dict())
        except Exception:
            logger.error("CoAP経由の取り込みで予期しないエラー", exc_info=True)
            return _json_response(Code.INTERNAL_SERVER_ERROR, {"error": "InternalError", "detail": "internal error"})
        return _json_response(Code.CHANGED, receipt.as_dict())


class CoapServer:
    """専用スレッドの asyncio ループ上で aiocoap のサーバーコンテキストを動かす"""

    def __init__(self, pipeline, host="127.0.0.1", port=DEFAULT_PORT):
        self.pipeline = pipeline
        self.host = host
        self.port = port
        self._loop = None
        self._thread = None
        self._context = None

    async def _create(self):
        site = resource.Site()
        site.add_resource(["ingest"], IngestResource(self.pipeline))
        return await aiocoap.Context.create_server_context(site, bind=(self.host, self.port))

    def start(self, timeout=10):
        self._loop = asyncio.new_event_loop()
        self._thread = threading.Thread(target=self._loop.run_forever, name="knotgate-coap", daemon=True)
        self._thread.start()
        try:
            self._context = asyncio.run_coroutine_threadsafe(self._create(), self._loop).result(timeout)
        except Exception:
            self._shutdown_loop()
            raise
        logger.info(f"CoAPサーバーを開始しました: coap://{self.host}:{self.port}/ingest")

    def _shutdown_loop(self):
        self._loop.call_soon_threadsafe(self._loop.stop)
        self._thread.join(5)
        self._loop.close()
        self._loop = None
        self._thread = None

    def stop(self):
        if self._loop is None:
            return
        if self._context is not None:
            asyncio.run_coroutine_threadsafe(self._context.shutdown(), self._loop).result(5)
            self._context = None
        self._shutdown_loop()
        logger.info("CoAPサーバーを停止しました")
