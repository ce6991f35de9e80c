"""
サービス層（HTTP API・購読・サービス合成・起動設定）の例外定義
"""


class ServiceError(Exception):
    """サービス層の例外の基底クラス"""

    def __init__(self, detail):
        super().__init__(detail)
        self.detail = detail

    @property
    def error(self):
        return type(self).__name__

    def as_dict(self):
        return {"error": self.error, "detail": self.detail}


class ConfigError(ServiceError):
    """設定ファイル、または設定が参照するファイルの誤り"""

    def __init__(self, path, reason):
        super().__init__(f"{path}: {reason}")
        self.path = str(path)
        self.reason = reason


class InvalidSubscription(ServiceError):
    pass


class InvalidComposition(ServiceError):
    pass


class UnknownPack(ServiceError):
    def __init__(self, pack_id):
        super().__init__(f"no such pack: {pack_id!r}")
        self.pack_id = pack_id


class BadRequest(ServiceError):
    pass


class ReplayAborted(ServiceError):
    """リプレイログの行が取り込めなかった（行番号付き）"""

    def __init__(self, line, reason):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason

    def as_dict(self):
        return {**super().as_dict(), "position": {"line": self.line, "column": 1}}
