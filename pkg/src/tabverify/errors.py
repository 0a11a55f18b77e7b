from __future__ import annotations

from typing import Sequence


class TabVerifyError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(TabVerifyError):
    pass


class DataError(TabVerifyError, ValueError):
    """Input data is malformed or violates an invariant."""


class ParseError(DataError):
    """One or more records could not be parsed.

    ``problems`` holds ``(line_number, message)`` pairs, 1-based.
    """

    def __init__(self, path: str, problems: Sequence[tuple[int, str]]):
        self.path = path
        self.problems = list(problems)
        head = "; ".join(f"line {n}: {m}" for n, m in self.problems[:5])
        more = f" (+{len(self.problems) - 5} more)" if len(self.problems) > 5 else ""
        super().__init__(f"{path}: {len(self.problems)} parse error(s): {head}{more}")


class ValidationError(DataError):
    def __init__(self, violations: Sequence[object], where: str = ""):
        self.violations = list(violations)
        prefix = f"{where}: " if where else ""
        head = "; ".join(str(v) for v in self.violations[:5])
        more = f" (+{len(self.violations) - 5} more)" if len(self.violations) > 5 else ""
        super().__init__(f"{prefix}{len(self.violations)} violation(s): {head}{more}")


class CoverageError(DataError):
    pass
