"""Runtime values and evaluation outcomes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping

FUEL_EXHAUSTED = "FuelExhausted"
DOMAIN_ERROR = "DomainError"


class Value:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Reals(Value):
    xs: tuple

    def __post_init__(self):
        for x in self.xs:
            if x != x:
                raise ValueError("Reals may not hold NaN")

    def __repr__(self) -> str:
        return f"Reals({self.xs!r})"


@dataclass(frozen=True, slots=True)
class Pair(Value):
    fst: Value
    snd: Value


@dataclass(frozen=True, slots=True)
class Closure(Value):
    param: str
    body: Any
    env: Mapping[str, Value]

    def __repr__(self) -> str:
        return f"<closure {self.param}>"


@dataclass(frozen=True, slots=True)
class RecClosure(Value):
    """The approximant f_depth of a recursive definition."""

    fname: str
    body: Any
    env: Mapping[str, Value]
    depth: int

    def __repr__(self) -> str:
        return f"<rec {self.fname}@{self.depth}>"


@dataclass(frozen=True, slots=True)
class PrimValue(Value):
    """A (possibly partially applied) primitive constant."""

    spec: Any
    args: tuple = ()

    def __repr__(self) -> str:
        return f"<prim {self.spec.name}/{len(self.args)}>"


class Bottomed(Exception):
    """Internal signal for ⊥; converted to a Bottom outcome at the API edge."""

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        self.detail = detail
        super().__init__(f"{reason}: {detail}" if detail else reason)


@dataclass(frozen=True)
class Halt:
    value: Value

    @property
    def halted(self) -> bool:
        return True


@dataclass(frozen=True)
class Bottom:
    reason: str
    detail: str = ""

    @property
    def halted(self) -> bool:
        return False


Outcome = Halt | Bottom


def real(x: float) -> Reals:
    return Reals((float(x),))


def scalar(v: Value) -> float:
    if not isinstance(v, Reals) or len(v.xs) != 1:
        raise TypeError(f"expected a scalar, got {v!r}")
    return v.xs[0]


def check_finite(name: str, r: float) -> float:
    if math.isnan(r) or math.isinf(r):
        raise Bottomed(DOMAIN_ERROR, f"{name}: non-finite result")
    return r


def flatten(v: Value) -> tuple:
    """Scalars of a ground value, left to right."""
    if isinstance(v, Reals):
        return v.xs
    if isinstance(v, Pair):
        return flatten(v.fst) + flatten(v.snd)
    raise TypeError(f"not a ground value: {v!r}")


def unflatten(ty, xs) -> Value:
    """Inverse of :func:`flatten` for a ground type."""
    from .types import Prod, RealVec

    xs = tuple(float(x) for x in xs)

    def go(t, i):
        if isinstance(t, RealVec):
            return Reals(xs[i:i + t.k]), i + t.k
        if isinstance(t, Prod):
            a, i = go(t.left, i)
            b, i = go(t.right, i)
            return Pair(a, b), i
        raise TypeError(f"{t} is not a ground type")

    v, used = go(ty, 0)
    if used != len(xs):
        raise ValueError(f"{ty} needs {used} scalars, got {len(xs)}")
    return v


def format_number(x: float) -> str:
    if x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def format_value(v: Value) -> str:
    if isinstance(v, Reals):
        if len(v.xs) == 1:
            return format_number(v.xs[0])
        return "[" + ", ".join(format_number(x) for x in v.xs) + "]"
    if isinstance(v, Pair):
        return f"({format_value(v.fst)}, {format_value(v.snd)})"
    return repr(v)


def format_outcome(o: Outcome) -> str:
    if isinstance(o, Halt):
        return f"Halt {format_value(o.value)}"
    return f"Bottom {o.reason}" + (f": {o.detail}" if o.detail else "")
