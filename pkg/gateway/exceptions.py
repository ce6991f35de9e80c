"""
ゲートウェイ層（アノテーション・プロトコルアダプタ・配信）の例外定義
"""


class GatewayError(Exception):
    """ゲートウェイ層の例外の基底クラス"""

    def __init__(self, detail):
        super().__init__(detail)
        self.detail = detail

    @property
    def error(self):
        return type(self).__name__

    def as_dict(self):
        return {"error": self.error, "detail": self.detail}


class InvalidRegistration(GatewayError):
    pass


class UnknownUnit(GatewayError):
    def __init__(self, unit):
        super().__init__(f"unknown unit code or IRI: {unit!r}")
        self.unit = unit


class UnsupportedConversion(GatewayError):
    def __init__(self, source, target):
        super().__init__(f"no conversion from {source!r} to {target!r}")
        self.source = source
        self.target = target


class UnregisteredDevice(GatewayError):
    def __init__(self, device_id):
        super().__init__(f"device {device_id!r} is not registered")
        self.device_id = device_id


class DecodeError(GatewayError):
    pass


class BadTopic(GatewayError):
    def __init__(self, topic):
        super().__init__(f"topic does not match iot/{{device_id}}/{{sensor_kind}}: {topic!r}")
        self.topic = topic


class InvalidTarget(GatewayError):
    pass
