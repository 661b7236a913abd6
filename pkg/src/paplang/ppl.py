"""Trace semantics for probabilistic programs.

A program of type ``M τ`` is elaborated to a core function from traces to
results.  With a fixed trace capacity K the encodings are::

    trace      T_K = R x L_K          (length, entries)
    entries    L_0 = R,  L_j = R x L_{j-1}   (K entries then a 0.0 terminator)
    Maybe τ    = R x τ                (tag 1.0 for Just, 0.0 and zeros for Nothing)
    result     = Maybe τ x (R x T_K)  (value, weight, remaining trace)

and the unit value returned by ``score`` is ``0.0 : R``.  Density queries fix
K to the length of the trace, so the density is a first-order term
``R^K -> R`` that the AD and oracle modules accept unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .ad import jacobian
from .constants import DEFAULT_TABLE, ConstTable
from .errors import ElaborationError, NegativeScore, TypeCheckError
from .evaluator import eval as eval_term, run
from .syntax import (
    App,
    Const,
    IfGtZero,
    Lam,
    Mu,
    PDo,
    PReturn,
    ProbTerm,
    PSample,
    PScore,
    Term,
    Var,
    app,
    const,
    iter_nodes,
    lit,
    pair,
)
from .typecheck import elaborate as elaborate_core, infer
from .types import Fun, Prod, R, RealVec, Ty
from .values import DOMAIN_ERROR, Bottom, Pair, Reals, Value

ZERO = lit(0.0)
ONE = lit(1.0)


def list_type(k: int) -> Ty:
    ty: Ty = R
    for _ in range(k):
        ty = Prod(R, ty)
    return ty


def trace_type(k: int) -> Ty:
    return Prod(R, list_type(k))


def result_type(tau: Ty, k: int) -> Ty:
    return Prod(Prod(R, tau), Prod(R, trace_type(k)))


def _fst(t: Term) -> Term:
    return app(Const("fst"), t)


def _snd(t: Term) -> Term:
    return app(Const("snd"), t)


def _list(items: list[Term]) -> Term:
    body: Term = ZERO
    for it in reversed(items):
        body = pair(it, body)
    return body


def _entry(tr: Term, i: int) -> Term:
    """The i-th entry (0-based) of a trace term."""
    t = _snd(tr)
    for _ in range(i):
        t = _snd(t)
    return _fst(t)


def _tail(tr: Term, k: int) -> Term:
    shifted = [_entry(tr, i) for i in range(1, k)] + [ZERO]
    return pair(app(const("sub"), _fst(tr), ONE), _list(shifted))


def _default(ty: Ty) -> Term:
    if isinstance(ty, RealVec):
        return lit(*([0.0] * ty.k))
    if isinstance(ty, Prod):
        return pair(_default(ty.left), _default(ty.right))
    raise ElaborationError(f"no default payload for a value of type {ty}")


def _names(p: ProbTerm) -> set[str]:
    if isinstance(p, (PReturn, PScore)):
        return _term_names(p.expr)
    if isinstance(p, PDo):
        return {p.var} | _names(p.first) | _names(p.rest)
    return set()


def _term_names(t: Term) -> set[str]:
    out = set()
    for n in iter_nodes(t):
        if isinstance(n, Var):
            out.add(n.name)
        elif isinstance(n, Lam):
            out.add(n.param)
        elif isinstance(n, Mu):
            out.add(n.fname)
    return out


class _Fresh:
    def __init__(self, avoid: set[str]):
        self.avoid = avoid
        self.n = 0

    def __call__(self, base: str) -> str:
        while True:
            self.n += 1
            name = f"_{base}{self.n}"
            if name not in self.avoid:
                self.avoid.add(name)
                return name


def prob_type(ctx: dict, p: ProbTerm, table: ConstTable = DEFAULT_TABLE) -> Ty:
    """The τ of ``p : M τ``."""
    if isinstance(p, PSample):
        return R
    if isinstance(p, PReturn):
        return infer(ctx, p.expr, table)
    if isinstance(p, PScore):
        ty = infer(ctx, p.expr, table)
        if ty != R:
            raise ElaborationError(f"score expects a weight of type R, got {ty}")
        return R
    if isinstance(p, PDo):
        sigma = prob_type(ctx, p.first, table)
        inner = dict(ctx) if p.var == "_" else {**ctx, p.var: sigma}
        return prob_type(inner, p.rest, table)
    raise ElaborationError(f"not a probabilistic term: {p!r}")


def _elab(p: ProbTerm, ctx: dict, k: int, fresh: _Fresh, table: ConstTable) -> tuple[Term, Ty]:
    tr = fresh("tr")
    trv = Var(tr)
    tty = trace_type(k)
    if isinstance(p, PReturn):
        tau = infer(ctx, p.expr, table)
        body = pair(pair(ONE, p.expr), pair(ONE, trv))
        return Lam(tr, tty, body), tau
    if isinstance(p, PSample):
        nothing = pair(pair(ZERO, ZERO), pair(ZERO, trv))
        if k == 0:
            return Lam(tr, tty, nothing), R
        just = pair(pair(ONE, _entry(trv, 0)), pair(ONE, _tail(trv, k)))
        return Lam(tr, tty, IfGtZero(_fst(trv), just, nothing)), R
    if isinstance(p, PScore):
        prob_type(ctx, p, table)
        body = pair(pair(ONE, ZERO), pair(app(const("weight"), p.expr), trv))
        return Lam(tr, tty, body), R
    if isinstance(p, PDo):
        first, sigma = _elab(p.first, ctx, k, fresh, table)
        x = p.var if p.var != "_" else fresh("x")
        rest, tau = _elab(p.rest, {**ctx, x: sigma}, k, fresh, table)
        r, r2 = fresh("r"), fresh("r")
        rv, r2v = Var(r), Var(r2)
        combine = Lam(r2, result_type(tau, k), pair(
            _fst(r2v),
            pair(app(const("mul"), _fst(_snd(rv)), _fst(_snd(r2v))), _snd(_snd(r2v))),
        ))
        cont = App(Lam(x, sigma, App(combine, App(rest, _snd(_snd(rv))))), _snd(_fst(rv)))
        nothing = pair(pair(ZERO, _default(tau)), pair(ZERO, trv))
        body = App(Lam(r, result_type(sigma, k), IfGtZero(_fst(_fst(rv)), cont, nothing)), App(first, trv))
        return Lam(tr, tty, body), tau
    raise ElaborationError(f"not a probabilistic term: {p!r}")


@lru_cache(maxsize=256)
def elaborate(p: ProbTerm, k: int = 0, table: ConstTable = DEFAULT_TABLE) -> Term:
    """Core term of type ``T_k -> Maybe τ x (R x T_k)`` computing ``p`` on traces."""
    fresh = _Fresh(_names(p))
    term, tau = _elab(p, {}, k, fresh, table)
    try:
        term, ty = elaborate_core({}, term, table)
    except TypeCheckError as e:
        raise ElaborationError(f"elaborated program is ill-typed: {e}") from e
    assert ty == Fun(trace_type(k), result_type(tau, k)), ty
    return term


def trace_value(tr) -> Value:
    k = len(tr)
    v: Value = Reals((0.0,))
    for x in reversed(tr):
        v = Pair(Reals((float(x),)), v)
    return Pair(Reals((float(k),)), v)


def decode_trace(v: Value) -> tuple:
    n = int(v.fst.xs[0])
    out = []
    cur = v.snd
    for _ in range(n):
        out.append(cur.fst.xs[0])
        cur = cur.snd
    return tuple(out)


@dataclass(frozen=True)
class TraceOutcome:
    """``value`` is None for Nothing."""

    value: Value | None
    weight: float
    remainder: tuple


def _score_error(out: Bottom) -> None:
    if out.reason == DOMAIN_ERROR and out.detail.startswith("score:"):
        raise NegativeScore(out.detail)


def run_trace(p: ProbTerm, tr, fuel: int | None = None,
              table: ConstTable = DEFAULT_TABLE) -> TraceOutcome | Bottom:
    """Run ``p`` on the trace ``tr`` and decode the (value, weight, remainder) triple."""
    tr = tuple(float(x) for x in tr)
    out = run(elaborate(p, len(tr), table), [trace_value(tr)], fuel, table)
    if isinstance(out, Bottom):
        _score_error(out)
        return out
    maybe, rest = out.value.fst, out.value.snd
    value = maybe.snd if maybe.fst.xs[0] > 0.0 else None
    return TraceOutcome(value, rest.fst.xs[0], decode_trace(rest.snd))


@lru_cache(maxsize=256)
def density_term(p: ProbTerm, k: int, table: ConstTable = DEFAULT_TABLE) -> Term:
    """``lam v : R^k. density of p at trace v`` (a closed term of type R when k = 0)."""
    prog = elaborate(p, k, table)
    fresh = _Fresh(_names(p) | _term_names(prog))
    res = fresh("res")
    tau = prog_result_type(prog)
    rv = Var(res)
    select = Lam(res, tau, IfGtZero(_fst(_snd(_snd(rv))), ZERO, _fst(_snd(rv))))
    if k == 0:
        term = App(select, App(prog, pair(ZERO, ZERO)))
    else:
        v = fresh("v")
        entries = [Var(v)] if k == 1 else [app(Const(f"idx{i + 1}"), Var(v)) for i in range(k)]
        term = Lam(v, R if k == 1 else RealVec(k), App(select, App(prog, pair(lit(float(k)), _list(entries)))))
    return elaborate_core({}, term, table)[0]


def prog_result_type(prog: Term) -> Ty:
    return infer({}, prog).ret


def trace_density(p: ProbTerm, tr, fuel: int | None = None,
                  table: ConstTable = DEFAULT_TABLE) -> float | Bottom:
    """Density of the trace ``tr``: the weight if all randomness is consumed, else 0.0."""
    tr = tuple(float(x) for x in tr)
    term = density_term(p, len(tr), table)
    if tr:
        out = run(term, [Reals(tr)], fuel, table)
    else:
        out = eval_term(term, fuel=fuel, table=table)
    if isinstance(out, Bottom):
        _score_error(out)
        return out
    return out.value.xs[0]


def density_gradient(p: ProbTerm, tr, fuel: int | None = None,
                     table: ConstTable = DEFAULT_TABLE) -> np.ndarray | Bottom:
    """AD gradient of the density with the trace length held fixed."""
    tr = tuple(float(x) for x in tr)
    if not tr:
        out = trace_density(p, tr, fuel, table)
        return out if isinstance(out, Bottom) else np.zeros(0)
    res = jacobian(density_term(p, len(tr), table), tr, fuel, table)
    if isinstance(res, Bottom):
        _score_error(res)
        return res
    return np.array(res[1][0], dtype=float)


__all__ = [
    "elaborate", "prob_type", "density_term", "trace_density", "density_gradient",
    "run_trace", "TraceOutcome", "trace_type", "result_type", "trace_value", "decode_trace",
]
