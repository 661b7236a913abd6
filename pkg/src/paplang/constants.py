"""The constant table: primitive meanings, type-indexed families and dual translations.

Every scalar primitive is analytic on an open domain.  Partial primitives
(``div``, ``log``, ``sqrt``, ``weight``) bottom with a DomainError outside it,
and so do their dual translations, which compute the primal part with the
very same function.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable

from .types import Fun, Prod, R, RealVec, Ty, dual_type
from .values import DOMAIN_ERROR, Bottomed, Pair, Reals, Value, check_finite


def _dom(name: str, ok: bool, x) -> None:
    if not ok:
        raise Bottomed(DOMAIN_ERROR, f"{name}: argument {x!r} outside domain")


def _div(a, b):
    _dom("div", b != 0.0, b)
    return a / b


def _exp(a):
    try:
        return math.exp(a)
    except OverflowError:
        raise Bottomed(DOMAIN_ERROR, "exp: non-finite result") from None


def _log(a):
    _dom("log", a > 0.0, a)
    return math.log(a)


def _sqrt(a):
    _dom("sqrt", a > 0.0, a)
    return math.sqrt(a)


def _weight(a):
    if a < 0.0:
        raise Bottomed(DOMAIN_ERROR, f"score: negative weight {a!r}")
    return a


@dataclass(frozen=True)
class ScalarPrim:
    """A curried primitive R -> ... -> R.

    ``tangent(xs, r, dxs)`` returns the directional derivative given the
    primal arguments, the primal result and the argument tangents.
    """

    name: str
    arity: int
    fn: Callable
    tangent: Callable
    # analytic domain: list of (arg index, kind) with kind in
    # {"pos": x > 0, "nonneg": x >= 0, "nonzero": x != 0}
    domain: tuple = ()


SCALAR_PRIMS: dict[str, ScalarPrim] = {
    p.name: p
    for p in [
        ScalarPrim("add", 2, lambda a, b: a + b, lambda xs, r, d: d[0] + d[1]),
        ScalarPrim("sub", 2, lambda a, b: a - b, lambda xs, r, d: d[0] - d[1]),
        ScalarPrim("mul", 2, lambda a, b: a * b, lambda xs, r, d: xs[0] * d[1] + d[0] * xs[1]),
        ScalarPrim("div", 2, _div, lambda xs, r, d: (d[0] - r * d[1]) / xs[1], ((1, "nonzero"),)),
        ScalarPrim("neg", 1, lambda a: -a, lambda xs, r, d: -d[0]),
        ScalarPrim("sin", 1, math.sin, lambda xs, r, d: d[0] * math.cos(xs[0])),
        ScalarPrim("cos", 1, math.cos, lambda xs, r, d: -(d[0] * math.sin(xs[0]))),
        ScalarPrim("exp", 1, _exp, lambda xs, r, d: d[0] * r),
        ScalarPrim("log", 1, _log, lambda xs, r, d: d[0] / xs[0], ((0, "pos"),)),
        ScalarPrim("sqrt", 1, _sqrt, lambda xs, r, d: d[0] / (2.0 * r), ((0, "pos"),)),
        ScalarPrim("weight", 1, _weight, lambda xs, r, d: d[0], ((0, "nonneg"),)),
    ]
}

INFIX = {"+": "add", "-": "sub", "*": "mul", "/": "div"}
INFIX_OF = {v: k for k, v in INFIX.items()}


def apply_scalar(p: ScalarPrim, xs) -> float:
    return check_finite(p.name, p.fn(*xs))


def apply_scalar_dual(p: ScalarPrim, xs, dxs) -> tuple[float, float]:
    r = apply_scalar(p, xs)
    t = p.tangent(xs, r, dxs)
    return r, check_finite(p.name + "_D", t)


@dataclass(frozen=True)
class ConstSpec:
    """A monomorphic constant: a value of type R^k or a curried function."""

    name: str
    ty: Ty
    arity: int = 0
    impl: Callable | None = None
    value: tuple | None = None
    dual: str | None = None
    prim: ScalarPrim | None = None
    is_dual: bool = False


@dataclass(frozen=True)
class FamilySpec:
    """A type-indexed family of structural constants such as ``pair``.

    ``instance(args)`` builds the instance type from the ``<...>`` arguments,
    ``params(ty)`` recovers them, and ``infer(arg_tys)`` picks the instance
    from the types of the first ``infer_arity`` arguments (None if it cannot).
    """

    name: str
    arity: int
    n_params: int
    instance: Callable[[tuple], Ty]
    params: Callable[[Ty], tuple]
    infer: Callable[[list], tuple | None]
    impl: Callable
    dual: str | None = None
    is_dual: bool = False
    infer_arity: int = 1


def _scalar_const(p: ScalarPrim) -> ConstSpec:
    ty: Ty = R
    for _ in range(p.arity):
        ty = Fun(R, ty)

    def impl(*vs):
        return Reals((apply_scalar(p, [v.xs[0] for v in vs]),))

    return ConstSpec(p.name, ty, p.arity, impl, dual=p.name + "_D", prim=p)


def _scalar_dual_const(p: ScalarPrim) -> ConstSpec:
    base = _scalar_const(p)

    def impl(*vs):
        xs = [v.fst.xs[0] for v in vs]
        ds = [v.snd.xs[0] for v in vs]
        r, t = apply_scalar_dual(p, xs, ds)
        return Pair(Reals((r,)), Reals((t,)))

    return ConstSpec(p.name + "_D", dual_type(base.ty), p.arity, impl, prim=p, is_dual=True)


def _pair_family() -> FamilySpec:
    def infer(tys):
        return tuple(tys) if len(tys) == 2 else None

    return FamilySpec(
        "pair", 2, 2,
        instance=lambda a: Fun(a[0], Fun(a[1], Prod(a[0], a[1]))),
        params=lambda t: (t.arg, t.ret.arg),
        infer=infer,
        impl=lambda a, b: Pair(a, b),
        dual="pair",
        infer_arity=2,
    )


def _proj_family(name: str, first: bool) -> FamilySpec:
    def infer(tys):
        t = tys[0]
        return (t.left, t.right) if isinstance(t, Prod) else None

    return FamilySpec(
        name, 1, 2,
        instance=lambda a: Fun(Prod(a[0], a[1]), a[0] if first else a[1]),
        params=lambda t: (t.arg.left, t.arg.right),
        infer=infer,
        impl=(lambda p: p.fst) if first else (lambda p: p.snd),
        dual=name,
    )


def _vec_k(t) -> int | None:
    return t.k if isinstance(t, RealVec) else None


def _idx_family(i: int) -> FamilySpec:
    def infer(tys):
        k = _vec_k(tys[0])
        return (tys[0],) if k is not None and k >= i else None

    def impl(v):
        return Reals((v.xs[i - 1],))

    return FamilySpec(
        f"idx{i}", 1, 1,
        instance=lambda a: Fun(a[0], R),
        params=lambda t: (t.arg,),
        infer=infer,
        impl=impl,
        dual=f"idx{i}_D",
    )


def _idx_dual_family(i: int) -> FamilySpec:
    def infer(tys):
        t = tys[0]
        if isinstance(t, Prod) and t.left == t.right and _vec_k(t.left) is not None and t.left.k >= i:
            return (t.left,)
        return None

    def impl(v):
        return Pair(Reals((v.fst.xs[i - 1],)), Reals((v.snd.xs[i - 1],)))

    return FamilySpec(
        f"idx{i}_D", 1, 1,
        instance=lambda a: dual_type(Fun(a[0], R)),
        params=lambda t: (t.arg.left,),
        infer=infer,
        impl=impl,
        is_dual=True,
    )


def _concat_family() -> FamilySpec:
    def infer(tys):
        if len(tys) == 2 and all(_vec_k(t) is not None for t in tys):
            return tuple(tys)
        return None

    return FamilySpec(
        "concat", 2, 2,
        instance=lambda a: Fun(a[0], Fun(a[1], RealVec(a[0].k + a[1].k))),
        params=lambda t: (t.arg, t.ret.arg),
        infer=infer,
        impl=lambda a, b: Reals(a.xs + b.xs),
        dual="concat_D",
        infer_arity=2,
    )


def _concat_dual_family() -> FamilySpec:
    def infer(tys):
        if len(tys) == 2 and all(isinstance(t, Prod) and _vec_k(t.left) is not None for t in tys):
            return (tys[0].left, tys[1].left)
        return None

    return FamilySpec(
        "concat_D", 2, 2,
        instance=lambda a: dual_type(Fun(a[0], Fun(a[1], RealVec(a[0].k + a[1].k)))),
        params=lambda t: (t.arg.left, t.ret.arg.left),
        infer=infer,
        impl=lambda a, b: Pair(Reals(a.fst.xs + b.fst.xs), Reals(a.snd.xs + b.snd.xs)),
        is_dual=True,
        infer_arity=2,
    )


_IDX = re.compile(r"idx([1-9][0-9]*)(_D)?$")


@dataclass(eq=False)
class ConstTable:
    """Mapping from constant names to their specs.

    ``idxI`` and ``idxI_D`` families are materialised on first lookup.
    """

    consts: dict = field(default_factory=dict)

    def register(self, spec) -> None:
        self.consts[spec.name] = spec

    def lookup(self, name: str):
        spec = self.consts.get(name)
        if spec is None:
            m = _IDX.match(name)
            if m:
                i = int(m.group(1))
                spec = _idx_dual_family(i) if m.group(2) else _idx_family(i)
                self.consts[name] = spec
        return spec

    def __contains__(self, name: str) -> bool:
        return self.lookup(name) is not None

    def copy(self) -> "ConstTable":
        return ConstTable(dict(self.consts))


def default_table() -> ConstTable:
    table = ConstTable()
    for p in SCALAR_PRIMS.values():
        table.register(_scalar_const(p))
        table.register(_scalar_dual_const(p))
    table.register(ConstSpec("pi", R, value=(math.pi,)))
    for fam in (_pair_family(), _proj_family("fst", True), _proj_family("snd", False),
                _concat_family(), _concat_dual_family()):
        table.register(fam)
    return table


DEFAULT_TABLE = default_table()


def is_reserved(name: str) -> bool:
    return name in DEFAULT_TABLE


def literal_name(value: tuple) -> str:
    if len(value) == 1:
        return repr(float(value[0]))
    return "[" + ", ".join(repr(float(x)) for x in value) + "]"
