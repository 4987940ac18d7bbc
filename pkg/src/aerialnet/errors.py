class DomainError(ValueError):
    """An argument lies outside the domain where an operation is defined."""


class GridSizeError(DomainError):
    """A requested grid exceeds the configured cell-count cap."""


class ReportError(ValueError):
    """A sensor report is malformed. ``line`` is set when parsed from a file."""

    def __init__(self, reason: str, line: int | None = None):
        self.reason = reason
        self.line = line
        super().__init__(reason if line is None else f"line {line}: {reason}")


class ScenarioError(ValueError):
    """A scenario description violates its schema. ``key`` names the culprit."""

    def __init__(self, key: str, reason: str):
        self.key = key
        self.reason = reason
        super().__init__(f"{key}: {reason}")
