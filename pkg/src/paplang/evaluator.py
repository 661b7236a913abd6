"""Fuel-indexed evaluator.

``eval(t, env, n)`` computes the n-th Kleene approximant of ``t``: every
μ-node denotes its approximant f_n, and each recursive call made through it
costs one level, so applying f_0 is ⊥.  β-reduction and primitives are free.
Sequencing is strict and left to right: function position before argument,
guard before branch.
"""

from __future__ import annotations

import os
from typing import Mapping

from ._deep import run_deep
from .constants import DEFAULT_TABLE, ConstSpec, ConstTable
from .syntax import App, Const, IfGtZero, Lam, Mu, Term, Var
from .values import (
    FUEL_EXHAUSTED,
    Bottom,
    Bottomed,
    Closure,
    Halt,
    Outcome,
    PrimValue,
    RecClosure,
    Reals,
    Value,
)

Env = Mapping[str, Value]


def default_fuel() -> int:
    return int(os.environ.get("PAPLANG_FUEL_DEFAULT", "1024"))


class _Machine:
    __slots__ = ("fuel", "table", "_consts")

    def __init__(self, fuel: int, table: ConstTable):
        if fuel < 0:
            raise ValueError("fuel must be nonnegative")
        self.fuel = fuel
        self.table = table
        self._consts: dict = {}

    def const(self, c: Const) -> Value:
        v = self._consts.get(c)
        if v is None:
            if c.value is not None:
                v = Reals(c.value)
            else:
                spec = self.table.lookup(c.name)
                if spec is None:
                    raise KeyError(f"unknown constant {c.name!r}")
                if isinstance(spec, ConstSpec) and spec.value is not None:
                    v = Reals(spec.value)
                else:
                    v = PrimValue(spec)
            self._consts[c] = v
        return v

    def ev(self, t: Term, env: Env) -> Value:
        cls = type(t)
        if cls is App:
            f = self.ev(t.fn, env)
            return self.apply(f, self.ev(t.arg, env))
        if cls is Var:
            return env[t.name]
        if cls is Const:
            return self.const(t)
        if cls is IfGtZero:
            g = self.ev(t.guard, env)
            return self.ev(t.then if g.xs[0] > 0.0 else t.else_, env)
        if cls is Lam:
            return Closure(t.param, t.body, {k: env[k] for k in t.fv})
        if cls is Mu:
            return RecClosure(t.fname, t.body, {k: env[k] for k in t.fv}, self.fuel)
        raise TypeError(f"not a term: {t!r}")

    def apply(self, f: Value, v: Value) -> Value:
        cls = type(f)
        if cls is Closure:
            env = dict(f.env)
            env[f.param] = v
            return self.ev(f.body, env)
        if cls is PrimValue:
            args = f.args + (v,)
            if len(args) == f.spec.arity:
                return f.spec.impl(*args)
            return PrimValue(f.spec, args)
        if cls is RecClosure:
            if f.depth == 0:
                raise Bottomed(FUEL_EXHAUSTED, f.fname)
            env = dict(f.env)
            env[f.fname] = RecClosure(f.fname, f.body, f.env, f.depth - 1)
            return self.apply(self.ev(f.body, env), v)
        raise TypeError(f"applying a non-function value {f!r}")


def _outcome(thunk) -> Outcome:
    try:
        return Halt(thunk())
    except Bottomed as b:
        return Bottom(b.reason, b.detail)


def eval(t: Term, env: Env | None = None, fuel: int | None = None,
         table: ConstTable = DEFAULT_TABLE) -> Outcome:  # noqa: A001
    """Evaluate ``t`` in ``env`` at approximation level ``fuel``."""
    m = _Machine(default_fuel() if fuel is None else fuel, table)
    env = dict(env or {})
    return run_deep(_outcome, lambda: m.ev(t, env))


def apply(f: Value, v: Value, fuel: int | None = None, table: ConstTable = DEFAULT_TABLE) -> Outcome:
    """Apply a function value to an argument value."""
    m = _Machine(default_fuel() if fuel is None else fuel, table)
    return run_deep(_outcome, lambda: m.apply(f, v))


def run(t: Term, args, fuel: int | None = None, table: ConstTable = DEFAULT_TABLE) -> Outcome:
    """Evaluate closed ``t`` and apply it to ``args`` in turn (curried)."""
    m = _Machine(default_fuel() if fuel is None else fuel, table)

    def go():
        f = m.ev(t, {})
        for a in args:
            f = m.apply(f, a)
        return f

    return run_deep(_outcome, go)
