class ConfigError(ValueError):
    # Base class of every experiment configuration problem.
    def __init__(self, key: str, message: str):
        self.key = key
        self.message = message
        super().__init__(self.message)

    def __str__(self) -> str:
        return f"{type(self).__name__}: {self.message}"


class UnknownKeyError(ConfigError):
    def __init__(self, key: str):
        super().__init__(key, f"unknown key '{key}'")


class TypeMismatchError(ConfigError):
    def __init__(self, key: str, expected: str, got: object):
        self.expected = expected
        self.got = got
        super().__init__(key, f"key '{key}' expects {expected}, got {got!r}")


class MissingRequiredError(ConfigError):
    def __init__(self, key: str):
        super().__init__(key, f"missing required key '{key}'")


class ConfigParseError(ConfigError):
    # The config document itself is not parseable; carries the position reported by the parser.
    def __init__(self, reason: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__("<document>", f"cannot parse config{where}: {reason}")
