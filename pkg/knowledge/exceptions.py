"""
ナレッジ層の例外定義
"""


class KnowledgeError(Exception):
    """ナレッジ層の例外の基底クラス"""

    def __init__(self, detail):
        super().__init__(detail)
        self.detail = detail

    @property
    def error(self):
        return type(self).__name__

    def as_dict(self):
        return {"error": self.error, "detail": self.detail}


class MalformedIri(KnowledgeError):
    pass


class NonFiniteValue(KnowledgeError):
    pass


class MalformedLiteral(KnowledgeError):
    pass


class ParseError(KnowledgeError):
    """トリプルファイルの構文エラー（行番号付き）"""

    def __init__(self, line, reason):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason

    def as_dict(self):
        return {**super().as_dict(), "position": {"line": self.line, "column": 1}}


class GrammarError(KnowledgeError):
    """ルール／クエリ文法のエラー（行・桁付き）"""

    def __init__(self, line, column, reason):
        super().__init__(f"line {line}, column {column}: {reason}")
        self.line = line
        self.column = column
        self.reason = reason

    @property
    def position(self):
        return {"line": self.line, "column": self.column}

    def as_dict(self):
        return {**super().as_dict(), "position": self.position}


class RuleSyntaxError(GrammarError):
    @property
    def error(self):
        return "SyntaxError"


class QuerySyntaxError(GrammarError):
    @property
    def error(self):
        return "SyntaxError"


class SafetyError(KnowledgeError):
    """ヘッドまたはガードの変数がボディで束縛されていない"""

    def __init__(self, rule_id, variables):
        names = ", ".join(f"?{v}" for v in variables)
        super().__init__(f"rule {rule_id!r}: unbound variable(s) {names}")
        self.rule_id = rule_id
        self.variables = list(variables)


class UnsafeQuery(KnowledgeError):
    def __init__(self, variables):
        names = ", ".join(f"?{v}" for v in variables)
        super().__init__(f"variable(s) {names} not bound by any pattern")
        self.variables = list(variables)


class RuleConflict(KnowledgeError):
    """別の有効なルールパックが同じルールIDを使用している"""

    def __init__(self, rule_id, pack_id):
        super().__init__(f"rule id {rule_id!r} is already provided by pack {pack_id!r}")
        self.rule_id = rule_id
        self.pack_id = pack_id


class GuardTypeError(KnowledgeError):
    """ガード変数が数値以外のリテラルに束縛された（該当の束縛のみスキップ）"""

    def __init__(self, rule_id, variable, term):
        super().__init__(f"rule {rule_id!r}: ?{variable} bound to non-numeric {term!r}")
        self.rule_id = rule_id
        self.variable = variable
        self.term = term
