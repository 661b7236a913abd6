"""The simple type system, with instance resolution for constant families."""

from __future__ import annotations

from typing import Mapping

from .constants import DEFAULT_TABLE, ConstSpec, ConstTable, FamilySpec
from .errors import TypeCheckError
from .syntax import App, Const, IfGtZero, Lam, Mu, Term, Var, spine
from .types import Fun, R, RealVec, Ty

Ctx = Mapping[str, Ty]


def infer(ctx: Ctx, t: Term, table: ConstTable = DEFAULT_TABLE) -> Ty:
    """Return the type of ``t`` under ``ctx`` or raise TypeCheckError."""
    return elaborate(ctx, t, table)[1]


def check_closed(t: Term, table: ConstTable = DEFAULT_TABLE) -> tuple[Term, Ty]:
    return elaborate({}, t, table)


def elaborate(ctx: Ctx, t: Term, table: ConstTable = DEFAULT_TABLE) -> tuple[Term, Ty]:
    """Type ``t`` and fill in the instance of every family constant.

    Returns the annotated term together with its type.
    """
    if isinstance(t, Var):
        if t.name not in ctx:
            raise TypeCheckError("var", f"{t.name!r} is not in the context", loc=t.loc)
        return t, ctx[t.name]
    if isinstance(t, Const):
        return t, _const_type(t, table)
    if isinstance(t, App):
        return _elab_app(ctx, t, table)
    if isinstance(t, IfGtZero):
        g, gty = elaborate(ctx, t.guard, table)
        if gty != R:
            raise TypeCheckError("if", "guard must be R", R, gty, loc=t.loc)
        a, aty = elaborate(ctx, t.then, table)
        b, bty = elaborate(ctx, t.else_, table)
        if aty != bty:
            raise TypeCheckError("if", "branches disagree", aty, bty, loc=t.loc)
        return IfGtZero(g, a, b, loc=t.loc), aty
    if isinstance(t, Lam):
        body, bty = elaborate({**ctx, t.param: t.param_ty}, t.body, table)
        return Lam(t.param, t.param_ty, body, loc=t.loc), Fun(t.param_ty, bty)
    if isinstance(t, Mu):
        if not isinstance(t.fty, Fun):
            raise TypeCheckError("mu", "recursive binder needs a function type", actual=t.fty, loc=t.loc)
        body, bty = elaborate({**ctx, t.fname: t.fty}, t.body, table)
        if bty != t.fty:
            raise TypeCheckError("mu", "body type differs from the declared type", t.fty, bty, loc=t.loc)
        return Mu(t.fname, t.fty, body, loc=t.loc), t.fty
    raise TypeCheckError("term", f"not a term: {t!r}")


def _const_type(c: Const, table: ConstTable) -> Ty:
    if c.value is not None:
        if c.ty is not None and c.ty != RealVec(len(c.value)):
            raise TypeCheckError("const", f"literal {c.name}", RealVec(len(c.value)), c.ty, loc=c.loc)
        return RealVec(len(c.value))
    spec = table.lookup(c.name)
    if spec is None:
        raise TypeCheckError("const", f"unknown constant {c.name!r}", loc=c.loc)
    if isinstance(spec, ConstSpec):
        if c.ty is not None and c.ty != spec.ty:
            raise TypeCheckError("const", f"constant {c.name}", spec.ty, c.ty, loc=c.loc)
        return spec.ty
    if c.ty is None:
        raise TypeCheckError(
            "const", f"cannot infer the instance of {c.name}; write {c.name}<...>", loc=c.loc)
    try:
        ok = spec.instance(spec.params(c.ty)) == c.ty
    except (AttributeError, ValueError, IndexError):
        ok = False
    if not ok:
        raise TypeCheckError("const", f"{c.ty} is not an instance of {c.name}", loc=c.loc)
    return c.ty


def _elab_app(ctx: Ctx, t: App, table: ConstTable) -> tuple[Term, Ty]:
    head, args = spine(t)
    done: list[tuple[Term, Ty]] = []
    if isinstance(head, Const) and head.ty is None and head.value is None:
        spec = table.lookup(head.name)
        if isinstance(spec, FamilySpec):
            if len(args) < spec.infer_arity:
                raise TypeCheckError(
                    "const", f"cannot infer the instance of {head.name}; write {head.name}<...>",
                    loc=head.loc)
            done = [elaborate(ctx, a, table) for a in args[:spec.infer_arity]]
            params = spec.infer([ty for _, ty in done])
            if params is None:
                raise TypeCheckError(
                    "app", f"no instance of {head.name} accepts these arguments",
                    actual=", ".join(str(ty) for _, ty in done), loc=head.loc)
            head = Const(head.name, spec.instance(params), loc=head.loc)
    fn, fty = elaborate(ctx, head, table)
    # re-walk the original spine so every App keeps its location
    apps = []
    node = t
    while isinstance(node, App):
        apps.append(node)
        node = node.fn
    apps.reverse()
    for i, node in enumerate(apps):
        a, aty = done[i] if i < len(done) else elaborate(ctx, node.arg, table)
        if not isinstance(fty, Fun):
            raise TypeCheckError("app", "applying a non-function", actual=fty, loc=node.loc)
        if fty.arg != aty:
            raise TypeCheckError("app", "argument type mismatch", fty.arg, aty, loc=node.loc)
        fn, fty = App(fn, a, loc=node.loc), fty.ret
    return fn, fty
