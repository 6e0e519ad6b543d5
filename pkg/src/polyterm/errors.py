"""Exception hierarchy.

Errors raised while validating or running a system carry the path of the
offending subtree (a tuple of child indices from the root) whenever there
is a meaningful subtree to point at.
"""

from __future__ import annotations


class PolytermError(Exception):
    """Base class for all errors raised by this package."""

    def __init__(self, msg: str, path: tuple[int, ...] | None = None):
        self.msg = msg
        self.path = path
        super().__init__(self.render())

    def render(self) -> str:
        if self.path is not None:
            return f"{self.msg} (at {'.'.join(map(str, self.path)) or 'root'})"
        return self.msg


class KindMismatch(PolytermError):
    """A type constructor does not kind-check."""


class TypeCheckError(PolytermError):
    """A term does not type-check."""


class SignatureError(PolytermError):
    """Ill-formed signature (duplicate names, open types, bad symbol shape)."""


class HeadViolation(PolytermError):
    """Application head is not a declared function symbol spine."""


class ScopeError(PolytermError):
    """Rule right-hand side uses a metavariable absent from the left."""


class TypeMismatch(PolytermError):
    """Rule sides do not share a type schema."""


class ParseError(PolytermError):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        super().__init__(f"{msg} (line {line}, column {col})" if line else msg)


class FuelExhausted(PolytermError):
    """Normalization exceeded its step budget; indicates an internal bug
    since well-typed interpretation terms terminate."""


class NotFinal(PolytermError):
    """Expected a closed normal interpretation term."""


class NotNat(PolytermError):
    """Expected a final term of type nat (a numeral)."""


class UnmappedConstant(PolytermError):
    """Type constructor constant without a type-constructor mapping."""


class UnmappedSymbol(PolytermError):
    """Function symbol without a symbol mapping."""


class ShapeError(PolytermError):
    """Symbol mapping image cannot be brought into binder-prefix shape."""


class SafetyFailure(PolytermError):
    def __init__(self, round_no: int, symbol: str, detail: str = ""):
        self.round_no = round_no
        self.symbol = symbol
        extra = f": {detail}" if detail else ""
        super().__init__(
            f"round {round_no}: symbol mapping for '{symbol}' is not known to be safe{extra}"
        )


class HintReplayError(PolytermError):
    def __init__(self, rule: str, step: str, reason: str):
        self.rule = rule
        self.step = step
        self.reason = reason
        super().__init__(f"hint for rule '{rule}' failed at step '{step}': {reason}")
