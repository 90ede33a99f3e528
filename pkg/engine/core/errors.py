class LadrError(Exception):
    """Base class for every error raised by the retrieval engine."""


class ConfigError(LadrError, ValueError):
    """Invalid parameter value or parameter combination."""


class DuplicateId(LadrError, ValueError):
    pass


class EmptyCorpus(LadrError, ValueError):
    pass


class ParseError(LadrError, ValueError):
    """A text input line could not be parsed."""

    def __init__(self, path, line_no: int, message: str):
        self.path = str(path)
        self.line_no = line_no
        super().__init__(f"{self.path}:{line_no}: {message}")


class FormatError(LadrError, ValueError):
    """Binary file header or cache metadata does not match the expected format."""


class TruncationError(LadrError, ValueError):
    pass


class InvalidVector(LadrError, ValueError):
    def __init__(self, row: int, message: str = "non-finite value"):
        self.row = row
        super().__init__(f"row {row}: {message}")


class AlignmentError(LadrError, ValueError):
    pass


class EmptyIndex(LadrError, ValueError):
    pass


class GraphTooSmall(LadrError, ValueError):
    pass


class DimError(LadrError, ValueError):
    pass


class IdError(LadrError, IndexError):
    pass


class InputError(LadrError, ValueError):
    pass


class EvalError(LadrError, ValueError):
    pass
