"""Exception hierarchy shared by every phase."""

from __future__ import annotations


class PapError(Exception):
    """Base class for all errors raised by paplang."""


class StaticError(PapError):
    """Errors detected before evaluation (CLI exit code 1)."""


class ParseError(StaticError):
    def __init__(self, message: str, line: int = 0, col: int = 0, expected: tuple[str, ...] = ()):
        self.line = line
        self.col = col
        self.expected = tuple(expected)
        where = f"{line}:{col}: " if line else ""
        tail = f" (expected one of: {', '.join(expected)})" if expected else ""
        super().__init__(f"{where}{message}{tail}")


class ScopeError(StaticError):
    def __init__(self, name: str, line: int = 0, col: int = 0):
        self.name = name
        self.line = line
        self.col = col
        where = f"{line}:{col}: " if line else ""
        super().__init__(f"{where}unbound variable {name!r}")


class TypeCheckError(StaticError):
    """A typing rule failed.

    ``rule`` names the rule of the type system that could not be applied;
    ``expected`` and ``actual`` are the clashing types (either may be None).
    """

    def __init__(self, rule: str, message: str, expected=None, actual=None, loc=None):
        self.rule = rule
        self.expected = expected
        self.actual = actual
        self.loc = loc
        parts = [f"[{rule}] {message}"]
        if expected is not None:
            parts.append(f"expected {expected}")
        if actual is not None:
            parts.append(f"got {actual}")
        where = f"{loc[0]}:{loc[1]}: " if loc else ""
        super().__init__(where + "; ".join(parts))


class MissingDual(StaticError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"constant {name!r} has no dual translation")


class ElaborationError(StaticError):
    pass


class NotFirstOrder(PapError):
    pass


class BudgetExceeded(PapError):
    """Symbolic unrolling left paths unresolved.

    ``unresolved`` lists the guard sets of the paths still blocked on a
    recursive call; ``partial`` is the representation built from the paths
    that did resolve.
    """

    def __init__(self, unresolved, partial=None, message: str | None = None):
        self.unresolved = unresolved
        self.partial = partial
        super().__init__(message or f"{len(unresolved)} path(s) unresolved within the unroll budget")


class OffDomain(PapError):
    pass


class MultiplePieces(PapError):
    pass


class NegativeScore(PapError):
    pass


class OffSupport(PapError):
    pass


class SingularJacobian(PapError):
    pass


class Diverged(PapError):
    """Raised by numeric helpers when the program bottoms at a needed point."""

    def __init__(self, outcome, point=None):
        self.outcome = outcome
        self.point = point
        super().__init__(f"evaluation bottomed at {point}: {outcome}")
