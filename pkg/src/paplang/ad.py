"""Forward-mode AD as a source-to-source rewrite.

The translation keeps variables, application, abstraction and recursion in
place, sends each constant to its dual, and branches on the primal part of
the translated guard.  The μ/if skeleton of the output is therefore the
skeleton of the input, node for node.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from ._deep import run_deep
from .constants import DEFAULT_TABLE, ConstSpec, ConstTable, FamilySpec
from .errors import MissingDual, NotFirstOrder
from .evaluator import _Machine, default_fuel
from .syntax import App, Const, IfGtZero, Lam, Mu, Term, Var, lit, pair
from .typecheck import check_closed
from .types import RealVec, Ty, dual_type, flat_dim, is_first_order
from .values import Bottom, Bottomed, Pair, Reals, Value

__all__ = ["dual_type", "ad_transform", "derivative", "jacobian", "Tangent"]


def _zeros(k: int) -> Const:
    return lit(*([0.0] * k))


def ad_transform(t: Term, table: ConstTable = DEFAULT_TABLE) -> Term:
    """Translate a term of type τ into a term of type D⟦τ⟧."""
    if t.__class__ is Var:
        return t
    if t.__class__ is Const:
        if t.value is not None:
            return pair(t, _zeros(len(t.value)))
        spec = table.lookup(t.name)
        if spec is None:
            raise MissingDual(t.name)
        if isinstance(spec, ConstSpec):
            if spec.value is not None:
                return pair(t, _zeros(len(spec.value)))
            if spec.dual is None:
                raise MissingDual(t.name)
            return Const(spec.dual, dual_type(spec.ty), loc=t.loc)
        if isinstance(spec, FamilySpec):
            if spec.dual is None:
                raise MissingDual(t.name)
            return Const(spec.dual, None if t.ty is None else dual_type(t.ty), loc=t.loc)
        raise MissingDual(t.name)
    if t.__class__ is App:
        return App(ad_transform(t.fn, table), ad_transform(t.arg, table), loc=t.loc)
    if t.__class__ is IfGtZero:
        guard = App(Const("fst"), ad_transform(t.guard, table), loc=t.loc)
        return IfGtZero(guard, ad_transform(t.then, table), ad_transform(t.else_, table), loc=t.loc)
    if t.__class__ is Lam:
        return Lam(t.param, dual_type(t.param_ty), ad_transform(t.body, table), loc=t.loc)
    if t.__class__ is Mu:
        return Mu(t.fname, dual_type(t.fty), ad_transform(t.body, table), loc=t.loc)
    raise TypeError(f"not a term: {t!r}")


@dataclass(frozen=True)
class Tangent:
    """Primal output and directional derivative of a first-order program."""

    primal: tuple
    tangent: tuple

    halted = True


@lru_cache(maxsize=512)
def _prepared(t: Term, table: ConstTable = DEFAULT_TABLE) -> tuple[Term, Ty, Ty]:
    _, ty = check_closed(t, table)
    if not is_first_order(ty):
        raise NotFirstOrder(f"expected a first-order function type, got {ty}")
    return ad_transform(t, table), ty.arg, ty.ret


def dual_value(ty: Ty, xs, dxs) -> Value:
    xs = tuple(float(x) for x in xs)
    dxs = tuple(float(x) for x in dxs)

    def go(t, i):
        if isinstance(t, RealVec):
            return Pair(Reals(xs[i:i + t.k]), Reals(dxs[i:i + t.k])), i + t.k
        a, i = go(t.left, i)
        b, i = go(t.right, i)
        return Pair(a, b), i

    n = flat_dim(ty)
    if len(xs) != n or len(dxs) != n:
        raise ValueError(f"{ty} needs {n} scalars")
    return go(ty, 0)[0]


def split_dual(ty: Ty, v: Value) -> tuple[tuple, tuple]:
    if isinstance(ty, RealVec):
        return v.fst.xs, v.snd.xs
    p1, t1 = split_dual(ty.left, v.fst)
    p2, t2 = split_dual(ty.right, v.snd)
    return p1 + p2, t1 + t2


def derivative(t: Term, x, direction, fuel: int | None = None,
               table: ConstTable = DEFAULT_TABLE) -> Tangent | Bottom:
    """Run the translated program on the dual input (x, direction)."""
    dt, a, b = _prepared(t, table)
    m = _Machine(default_fuel() if fuel is None else fuel, table)
    arg = dual_value(a, x, direction)

    def go():
        try:
            out = m.apply(m.ev(dt, {}), arg)
        except Bottomed as e:
            return Bottom(e.reason, e.detail)
        p, d = split_dual(b, out)
        return Tangent(p, d)

    return run_deep(go)


def jacobian(t: Term, x, fuel: int | None = None, table: ConstTable = DEFAULT_TABLE):
    """AD Jacobian (m x n nested lists) by one forward pass per input coordinate."""
    _, a, b = _prepared(t, table)
    n = flat_dim(a)
    cols = []
    primal = None
    for j in range(n):
        e = [0.0] * n
        e[j] = 1.0
        r = derivative(t, x, e, fuel, table)
        if isinstance(r, Bottom):
            return r
        primal = r.primal
        cols.append(r.tangent)
    m = flat_dim(b)
    return primal, [[cols[j][i] for j in range(n)] for i in range(m)]


def input_output_types(t: Term, table: ConstTable = DEFAULT_TABLE) -> tuple[Ty, Ty]:
    _, a, b = _prepared(t, table)
    return a, b

