"""Exception hierarchy shared by every pipeline stage."""


class PbsmtError(Exception):
    """Base class; carries the CLI exit code for the failure kind."""

    exit_code = 1
    kind = "error"


class ValidationError(PbsmtError, ValueError):
    exit_code = 3
    kind = "validation"


class SizeError(ValidationError):
    kind = "size"


class CorpusDecodeError(ValidationError):
    """Input bytes are not valid UTF-8."""

    kind = "decode"

    def __init__(self, path, lineno, reason=""):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{self.path}:{lineno}: invalid UTF-8 {reason}".rstrip())


class ParseError(ValidationError):
    kind = "parse"

    def __init__(self, message, lineno=None, path=None):
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where = f"{path}:"
        if lineno is not None:
            where += f"{lineno}: "
        elif where:
            where += " "
        super().__init__(f"{where}{message}")


class DecodeFailure(PbsmtError):
    """No full-coverage hypothesis survived search."""

    exit_code = 4
    kind = "decode-failure"


class TuningError(PbsmtError):
    exit_code = 4
    kind = "tuning"
