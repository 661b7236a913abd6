"""Symbolic path evaluation.

A program is run on symbolic inputs.  Reals become expression DAGs over the
input coordinates built from the scalar primitives, and every data-dependent
branch asks a *chooser* which way to go, recording the guard on the path.
Closures, pairs and recursion are handled exactly as in the concrete
evaluator, so a completed path yields an analytic piece: a guard system plus
branch-free output expressions.

Expressions are evaluated by calling the very same primitive functions as
the evaluator, in the same order, so a piece agrees with ``eval`` bit for
bit on its set.  Subexpressions whose arguments are all literals are folded
eagerly, which computes the same operations on the same values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .constants import DEFAULT_TABLE, SCALAR_PRIMS, ConstSpec, ConstTable, FamilySpec, apply_scalar
from .syntax import App, Const, IfGtZero, Lam, Mu, Term, Var, app, const, lit
from .types import Prod, RealVec, Ty
from .values import DOMAIN_ERROR, Bottomed


class Sym:
    """Node of a scalar expression DAG.

    ``op`` is ``"in"`` (input coordinate ``val``), ``"lit"`` (constant ``val``)
    or the name of a scalar primitive applied to ``args``.
    """

    __slots__ = ("op", "args", "val", "_h")

    def __init__(self, op: str, args: tuple = (), val=None):
        self.op = op
        self.args = args
        self.val = val
        key = (math.copysign(1.0, val), val) if op == "lit" else val
        self._h = hash((op, key) + tuple(a._h for a in args))

    def __hash__(self) -> int:
        return self._h

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, Sym) or self._h != other._h or self.op != other.op:
            return False
        if self.op == "lit":
            return self.val == other.val and math.copysign(1.0, self.val) == math.copysign(1.0, other.val)
        return self.val == other.val and self.args == other.args

    def __repr__(self) -> str:
        return show_sym(self)

    @property
    def is_lit(self) -> bool:
        return self.op == "lit"


def sym_in(i: int) -> Sym:
    return Sym("in", val=i)


def sym_lit(c: float) -> Sym:
    return Sym("lit", val=float(c))


ZERO = sym_lit(0.0)
ONE = sym_lit(1.0)


def sym_op(name: str, *args: Sym) -> Sym:
    """Build ``name(args)``, folding when every argument is a literal.

    Folding may raise Bottomed exactly when the evaluator would.
    """
    if all(a.op == "lit" for a in args):
        return sym_lit(apply_scalar(SCALAR_PRIMS[name], [a.val for a in args]))
    return Sym(name, tuple(args))


def evaluate(e: Sym, x: Sequence[float], memo: dict | None = None) -> float:
    """Value of ``e`` at input ``x``; raises Bottomed outside the domain."""
    if memo is None:
        memo = {}
    return _eval(e, x, memo)


def _eval(e: Sym, x, memo) -> float:
    if e.op == "lit":
        return e.val
    if e.op == "in":
        return x[e.val]
    r = memo.get(id(e))
    if r is None:
        r = apply_scalar(SCALAR_PRIMS[e.op], [_eval(a, x, memo) for a in e.args])
        memo[id(e)] = r
    return r


def substitute(e: Sym, inputs: Sequence[Sym], memo: dict | None = None) -> Sym:
    """Replace input coordinate i by ``inputs[i]`` (folding as it goes)."""
    if memo is None:
        memo = {}

    def go(e):
        if e.op == "lit":
            return e
        if e.op == "in":
            return inputs[e.val]
        r = memo.get(id(e))
        if r is None:
            r = sym_op(e.op, *[go(a) for a in e.args])
            memo[id(e)] = r
        return r

    return go(e)


# -- symbolic differentiation ---------------------------------------------

def _add(a: Sym, b: Sym) -> Sym:
    if a == ZERO:
        return b
    if b == ZERO:
        return a
    return sym_op("add", a, b)


def _sub(a: Sym, b: Sym) -> Sym:
    if b == ZERO:
        return a
    if a == ZERO:
        return sym_op("neg", b)
    return sym_op("sub", a, b)


def _mul(a: Sym, b: Sym) -> Sym:
    if a == ZERO or b == ZERO:
        return ZERO
    if a == ONE:
        return b
    if b == ONE:
        return a
    return sym_op("mul", a, b)


def _div(a: Sym, b: Sym) -> Sym:
    if a == ZERO:
        return ZERO
    if b == ONE:
        return a
    return sym_op("div", a, b)


def diff(e: Sym, i: int, memo: dict | None = None) -> Sym:
    """Partial derivative of ``e`` with respect to input coordinate ``i``."""
    if memo is None:
        memo = {}

    def d(e: Sym) -> Sym:
        if e.op == "lit":
            return ZERO
        if e.op == "in":
            return ONE if e.val == i else ZERO
        r = memo.get(id(e))
        if r is not None:
            return r
        a = e.args
        if e.op == "add":
            r = _add(d(a[0]), d(a[1]))
        elif e.op == "sub":
            r = _sub(d(a[0]), d(a[1]))
        elif e.op == "mul":
            r = _add(_mul(a[0], d(a[1])), _mul(d(a[0]), a[1]))
        elif e.op == "div":
            # (u/v)' = (u' - (u/v) v') / v
            r = _div(_sub(d(a[0]), _mul(e, d(a[1]))), a[1])
        elif e.op == "neg":
            da = d(a[0])
            r = ZERO if da == ZERO else sym_op("neg", da)
        elif e.op == "sin":
            r = _mul(sym_op("cos", a[0]), d(a[0]))
        elif e.op == "cos":
            da = d(a[0])
            r = ZERO if da == ZERO else sym_op("neg", _mul(sym_op("sin", a[0]), da))
        elif e.op == "exp":
            r = _mul(e, d(a[0]))
        elif e.op == "log":
            r = _div(d(a[0]), a[0])
        elif e.op == "sqrt":
            r = _div(d(a[0]), _mul(sym_lit(2.0), e))
        elif e.op == "weight":
            r = d(a[0])
        else:
            raise NotImplementedError(f"no derivative rule for {e.op}")
        memo[id(e)] = r
        return r

    return d(e)


# -- conversion to terms --------------------------------------------------

def to_term(e: Sym, arg: Term, scalar: bool = False) -> Term:
    """The expression as a core term, with input i read as ``idx{i+1} arg``.

    With ``scalar`` set, ``arg`` has type R and is the single coordinate.
    """
    memo: dict = {}

    def go(e):
        if e.op == "lit":
            return lit(e.val)
        if e.op == "in":
            return arg if scalar else app(Const(f"idx{e.val + 1}"), arg)
        r = memo.get(id(e))
        if r is None:
            r = app(const(e.op), *[go(a) for a in e.args])
            memo[id(e)] = r
        return r

    return go(e)


def show_sym(e: Sym) -> str:
    """Compact infix rendering used in diagnostics."""
    infix = {"add": "+", "sub": "-", "mul": "*", "div": "/"}
    if e.op == "lit":
        return repr(e.val)
    if e.op == "in":
        return f"x{e.val + 1}"
    if e.op in infix:
        return f"({show_sym(e.args[0])} {infix[e.op]} {show_sym(e.args[1])})"
    if e.op == "neg":
        return f"-{show_sym(e.args[0])}"
    return f"{e.op}({', '.join(show_sym(a) for a in e.args)})"


# -- symbolic values -------------------------------------------------------

@dataclass(frozen=True, slots=True)
class SVec:
    exprs: tuple


@dataclass(frozen=True, slots=True)
class SPair:
    fst: object
    snd: object


@dataclass(frozen=True, slots=True)
class SClo:
    param: str
    body: Term
    env: dict


@dataclass(frozen=True, slots=True)
class SRec:
    fname: str
    body: Term
    env: dict
    depth: int


@dataclass(frozen=True, slots=True)
class SPrim:
    spec: object
    args: tuple = ()


class NeedChoice(Exception):
    """The replay prefix ran out at a branch point."""


class Unresolved(Exception):
    """A recursive call needed more unrolling than the budget allows."""


class NotBranchFree(Exception):
    """A guard or piece term contained a data-dependent branch."""


class Path:
    """Guards accumulated along one execution path.

    ``guards`` holds ``(g, strict)`` pairs: strict means g > 0, otherwise g <= 0.
    """

    def __init__(self):
        self.guards: list[tuple[Sym, bool]] = []
        self._known: dict = {}

    def known(self, g: Sym):
        return self._known.get(g)

    def add(self, g: Sym, strict: bool) -> None:
        prev = self._known.get(g)
        if prev is None:
            self.guards.append((g, strict))
            self._known[g] = strict
        elif prev != strict:
            raise Bottomed(DOMAIN_ERROR, "contradictory path")


class Chooser:
    """Decides data-dependent branches; subclasses pick the strategy."""

    def __init__(self):
        self.path = Path()

    def pick(self, g: Sym) -> bool:
        raise NotImplementedError

    def require_pick(self, g: Sym) -> bool:
        """Whether the path may assume g > 0 (domain conditions)."""
        raise NotImplementedError

    def branch(self, g: Sym) -> bool:
        if g.op == "lit":
            return g.val > 0.0
        k = self.path.known(g)
        if k is not None:
            return k
        b = self.pick(g)
        self.path.add(g, b)
        return b

    def require(self, g: Sym, strict: bool) -> None:
        """Domain condition: g > 0 (strict) or g <= 0 must hold, else ⊥."""
        if g.op == "lit":
            ok = g.val > 0.0 if strict else g.val <= 0.0
            if not ok:
                raise Bottomed(DOMAIN_ERROR, "literal outside domain")
            return
        k = self.path.known(g)
        if k is None:
            if not self.require_check(g, strict):
                raise Bottomed(DOMAIN_ERROR, "outside primitive domain")
            self.path.add(g, strict)
        elif k != strict:
            raise Bottomed(DOMAIN_ERROR, "outside primitive domain")

    def require_check(self, g: Sym, strict: bool) -> bool:
        return True


class ReplayChooser(Chooser):
    """Follows a list of recorded decisions; raises NeedChoice past its end."""

    def __init__(self, decisions: Sequence[bool]):
        super().__init__()
        self.decisions = list(decisions)
        self.used = 0

    def pick(self, g: Sym) -> bool:
        if self.used >= len(self.decisions):
            raise NeedChoice()
        b = self.decisions[self.used]
        self.used += 1
        return b


class PointChooser(Chooser):
    """Follows the path a concrete input takes."""

    def __init__(self, x: Sequence[float]):
        super().__init__()
        self.x = tuple(float(v) for v in x)
        self.memo: dict = {}

    def value(self, g: Sym) -> float:
        return _eval(g, self.x, self.memo)

    def pick(self, g: Sym) -> bool:
        return self.value(g) > 0.0

    def require_check(self, g: Sym, strict: bool) -> bool:
        v = self.value(g)
        return v > 0.0 if strict else v <= 0.0


class NoBranchChooser(Chooser):
    def pick(self, g: Sym) -> bool:
        raise NotBranchFree(f"data-dependent branch on {show_sym(g)}")


class SymMachine:
    def __init__(self, chooser: Chooser, budget: int, table: ConstTable = DEFAULT_TABLE,
                 check_point: bool = False):
        self.chooser = chooser
        self.budget = budget
        self.table = table
        # in point mode, evaluate every new node so overflow bottoms like eval
        self.check_point = check_point

    def const(self, c: Const):
        if c.value is not None:
            return SVec(tuple(sym_lit(v) for v in c.value))
        spec = self.table.lookup(c.name)
        if isinstance(spec, ConstSpec) and spec.value is not None:
            return SVec(tuple(sym_lit(v) for v in spec.value))
        if spec is None:
            raise KeyError(c.name)
        return SPrim(spec)

    def ev(self, t: Term, env: dict):
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
            return self.ev(t.then if self.chooser.branch(g.exprs[0]) else t.else_, env)
        if cls is Lam:
            return SClo(t.param, t.body, {k: env[k] for k in t.fv})
        if cls is Mu:
            return SRec(t.fname, t.body, {k: env[k] for k in t.fv}, self.budget)
        raise TypeError(f"not a term: {t!r}")

    def apply(self, f, v):
        cls = type(f)
        if cls is SClo:
            env = dict(f.env)
            env[f.param] = v
            return self.ev(f.body, env)
        if cls is SPrim:
            args = f.args + (v,)
            if len(args) == f.spec.arity:
                return self.prim(f.spec, args)
            return SPrim(f.spec, args)
        if cls is SRec:
            if f.depth == 0:
                raise Unresolved(f.fname)
            env = dict(f.env)
            env[f.fname] = SRec(f.fname, f.body, f.env, f.depth - 1)
            return self.apply(self.ev(f.body, env), v)
        raise TypeError(f"applying a non-function {f!r}")

    def prim(self, spec, args):
        if isinstance(spec, ConstSpec):
            p = spec.prim
            if p is None or spec.is_dual:
                raise NotImplementedError(f"symbolic evaluation of {spec.name}")
            exprs = [a.exprs[0] for a in args]
            if not all(e.op == "lit" for e in exprs):
                for idx, kind in p.domain:
                    self._domain(exprs[idx], kind)
            e = sym_op(p.name, *exprs)
            if self.check_point and e.op != "lit":
                self.chooser.value(e)
            return SVec((e,))
        name = spec.name
        if name == "pair":
            return SPair(args[0], args[1])
        if name == "fst":
            return args[0].fst
        if name == "snd":
            return args[0].snd
        if name == "concat":
            return SVec(args[0].exprs + args[1].exprs)
        if isinstance(spec, FamilySpec) and name.startswith("idx") and not spec.is_dual:
            i = int(name[3:])
            return SVec((args[0].exprs[i - 1],))
        raise NotImplementedError(f"symbolic evaluation of {name}")

    def _domain(self, e: Sym, kind: str) -> None:
        ch = self.chooser
        if kind == "pos":
            ch.require(e, True)
        elif kind == "nonneg":
            ch.require(sym_op("neg", e), False)
        elif kind == "nonzero":
            if e.op == "lit":
                return
            neg = sym_op("neg", e)
            if ch.path.known(e) is True or ch.path.known(neg) is True:
                return
            if ch.path.known(e) is False:
                ch.require(neg, True)
                return
            # fork: e > 0 or -e > 0
            if ch.branch(e):
                return
            ch.require(neg, True)
        else:
            raise ValueError(kind)


def symbolic_input(ty: Ty, start: int = 0):
    """Symbolic value of a ground type whose scalars are inputs start, start+1, ..."""
    def go(t, i):
        if isinstance(t, RealVec):
            return SVec(tuple(sym_in(j) for j in range(i, i + t.k))), i + t.k
        if isinstance(t, Prod):
            a, i = go(t.left, i)
            b, i = go(t.right, i)
            return SPair(a, b), i
        raise TypeError(f"{t} is not a ground type")

    return go(ty, start)[0]


def sym_flatten(v) -> tuple:
    if isinstance(v, SVec):
        return v.exprs
    if isinstance(v, SPair):
        return sym_flatten(v.fst) + sym_flatten(v.snd)
    raise TypeError(f"not a ground symbolic value: {v!r}")


def run_path(t: Term, in_ty: Ty, chooser: Chooser, budget: int,
             table: ConstTable = DEFAULT_TABLE, check_point: bool = False) -> tuple:
    """Run closed ``t : in_ty -> _`` symbolically; returns flattened outputs."""
    m = SymMachine(chooser, budget, table, check_point)
    f = m.ev(t, {})
    return sym_flatten(m.apply(f, symbolic_input(in_ty)))


def enumerate_paths(run: Callable[[Chooser], tuple], max_paths: int):
    """Depth-first enumeration of all decision sequences.

    Returns (completed, unresolved, truncated) where completed holds
    (guards, outputs) pairs and unresolved holds guard lists.
    """
    completed = []
    unresolved = []
    stack: list[list[bool]] = [[]]
    visited = 0
    while stack:
        if visited >= max_paths:
            return completed, unresolved, True
        prefix = stack.pop()
        ch = ReplayChooser(prefix)
        try:
            out = run(ch)
        except NeedChoice:
            stack.append(prefix + [False])
            stack.append(prefix + [True])
            continue
        except Unresolved:
            unresolved.append(list(ch.path.guards))
            visited += 1
            continue
        except Bottomed:
            visited += 1
            continue
        completed.append((list(ch.path.guards), out))
        visited += 1
    return completed, unresolved, False
