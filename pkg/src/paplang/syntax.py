"""Terms of the object language, the concrete grammar, and the pretty-printer.

Concrete syntax::

    program := ("let" IDENT "=" term ";")* (term | prob)
    term    := "lam" IDENT ":" type "." term
             | "mu" IDENT ":" type "." term
             | sum
    sum     := prod (("+" | "-") prod)*
    prod    := unary (("*" | "/") unary)*
    unary   := "-" unary | "if" "(" term ">" "0" ")" atom atom | app
    app     := atom atom*
    atom    := IDENT | IDENT "<" type ("," type)* ">" | NUMBER
             | "[" number ("," number)* "]" | "(" term ("," term)* ")"
    type    := prodty ("->" type)?
    prodty  := atomty ("x" prodty)?
    atomty  := "R" ("^" NUMBER)? | "(" type ")"
    prob    := "prob" "{" stmt (";" stmt)* "}"
    stmt    := (IDENT "<-")? ("sample" | "score" term | "return" term | prob)

``(a, b)`` is sugar for ``pair a b`` and ``(a, b, c)`` for ``(a, (b, c))``.
Infix operators are sugar for the curried constants ``add sub mul div``
and prefix ``-`` for ``neg``.  ``#`` starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator

from .constants import DEFAULT_TABLE, INFIX, INFIX_OF, ConstSpec, ConstTable, FamilySpec, literal_name
from .errors import ParseError, ScopeError
from .types import Fun, Prod, RealVec, Ty, show_type

Loc = tuple  # (line, col)


class Term:
    """Base class of terms.  Nodes are immutable; hashes and free variables are cached."""

    @cached_property
    def fv(self) -> frozenset:
        return frozenset(self._free())

    @cached_property
    def _hash(self) -> int:
        return hash((type(self).__name__,) + self._key())

    def __hash__(self) -> int:
        return self._hash

    def __str__(self) -> str:
        return pretty(self)


def _node(cls):
    cls = dataclass(frozen=True, eq=True, repr=False)(cls)
    cls.__hash__ = Term.__hash__
    return cls


@_node
class Var(Term):
    name: str
    loc: Loc | None = field(default=None, compare=False)

    def _free(self):
        return {self.name}

    def _key(self):
        return (self.name,)

    def __repr__(self):
        return f"Var({self.name!r})"


@_node
class Const(Term):
    name: str
    ty: Ty | None = None
    value: tuple | None = None
    loc: Loc | None = field(default=None, compare=False)

    def _free(self):
        return set()

    def _key(self):
        return (self.name, self.ty, self.value)

    def __repr__(self):
        return f"Const({self.name!r})"


@_node
class App(Term):
    fn: Term
    arg: Term
    loc: Loc | None = field(default=None, compare=False)

    def _free(self):
        return self.fn.fv | self.arg.fv

    def _key(self):
        return (self.fn, self.arg)

    def __repr__(self):
        return f"App({self.fn!r}, {self.arg!r})"


@_node
class IfGtZero(Term):
    guard: Term
    then: Term
    else_: Term
    loc: Loc | None = field(default=None, compare=False)

    def _free(self):
        return self.guard.fv | self.then.fv | self.else_.fv

    def _key(self):
        return (self.guard, self.then, self.else_)

    def __repr__(self):
        return f"IfGtZero({self.guard!r}, {self.then!r}, {self.else_!r})"


@_node
class Lam(Term):
    param: str
    param_ty: Ty
    body: Term
    loc: Loc | None = field(default=None, compare=False)

    def _free(self):
        return self.body.fv - {self.param}

    def _key(self):
        return (self.param, self.param_ty, self.body)

    def __repr__(self):
        return f"Lam({self.param!r}, {self.param_ty!r}, {self.body!r})"


@_node
class Mu(Term):
    fname: str
    fty: Ty
    body: Term
    loc: Loc | None = field(default=None, compare=False)

    def _free(self):
        return self.body.fv - {self.fname}

    def _key(self):
        return (self.fname, self.fty, self.body)

    def __repr__(self):
        return f"Mu({self.fname!r}, {self.fty!r}, {self.body!r})"


# Probabilistic surface syntax; elaborated to core terms by paplang.ppl.

class ProbTerm:
    def __str__(self) -> str:
        return pretty_prob(self)


@dataclass(frozen=True)
class PReturn(ProbTerm):
    expr: Term


@dataclass(frozen=True)
class PSample(ProbTerm):
    pass


@dataclass(frozen=True)
class PScore(ProbTerm):
    expr: Term


@dataclass(frozen=True)
class PDo(ProbTerm):
    var: str
    first: ProbTerm
    rest: ProbTerm


# -- constructors ---------------------------------------------------------

def lit(*xs: float) -> Const:
    value = tuple(float(x) for x in xs)
    return Const(literal_name(value), RealVec(len(value)), value)


def const(name: str, table: ConstTable = DEFAULT_TABLE) -> Const:
    spec = table.lookup(name)
    if spec is None:
        raise KeyError(name)
    return Const(name, spec.ty if isinstance(spec, ConstSpec) else None)


def app(f: Term, *args: Term) -> Term:
    for a in args:
        f = App(f, a)
    return f


def pair(a: Term, b: Term) -> Term:
    return app(Const("pair"), a, b)


def binop(op: str, a: Term, b: Term) -> Term:
    return app(const(INFIX.get(op, op)), a, b)


def spine(t: Term) -> tuple[Term, list[Term]]:
    """Split an application chain into its head and arguments."""
    args = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fn
    args.reverse()
    return t, args


# -- lexer ----------------------------------------------------------------

KEYWORDS = {"lam", "mu", "if", "let", "prob", "sample", "score", "return", "R"}

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<num>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sym>->|<-|[()\[\],.:;{}<>+\-*/^=])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # "num", "ident", "sym", "eof"
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        s = m.group()
        if kind == "nl":
            line, col = line + 1, 1
        else:
            if kind in ("num", "ident", "sym"):
                tokens.append(Token(kind, s, line, col))
            col += len(s)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


# -- parser ---------------------------------------------------------------

PRELUDE_SOURCE = {
    "relu": "lam x : R. if (x > 0) x 0",
    "abs": "lam x : R. if (x > 0) x (-x)",
    "max": "lam a : R. lam b : R. if (a - b > 0) a b",
    "min": "lam a : R. lam b : R. if (a - b > 0) b a",
}
_prelude_cache: dict[str, Term] = {}


def prelude_term(name: str) -> Term:
    if name not in _prelude_cache:
        _prelude_cache[name] = Parser(PRELUDE_SOURCE[name], use_prelude=False).parse_term_only()
    return _prelude_cache[name]


class Parser:
    def __init__(self, text: str, table: ConstTable = DEFAULT_TABLE, use_prelude: bool = True):
        self.toks = tokenize(text)
        self.i = 0
        self.table = table
        self.use_prelude = use_prelude
        self.scope: list[str] = []
        self.lets: dict[str, Term] = {}

    # token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("sym", "ident") and t.text == text

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"unexpected {self.describe(self.tok)}", (repr(text),))
        return self.advance()

    def fail(self, msg: str, expected=()):
        raise ParseError(msg, self.tok.line, self.tok.col, tuple(expected))

    @staticmethod
    def describe(t: Token) -> str:
        return "end of input" if t.kind == "eof" else repr(t.text)

    def loc(self) -> Loc:
        return (self.tok.line, self.tok.col)

    def ident(self) -> str:
        t = self.tok
        if t.kind != "ident" or t.text in KEYWORDS:
            self.fail(f"unexpected {self.describe(t)}", ("identifier",))
        self.advance()
        return t.text

    def binder(self) -> str:
        t = self.tok
        name = self.ident()
        if self.table.lookup(name) is not None:
            raise ParseError(f"cannot bind constant name {name!r}", t.line, t.col)
        return name

    # entry points
    def parse_program(self):
        while self.at("let"):
            self.advance()
            name = self.binder()
            self.expect("=")
            self.lets[name] = self.term()
            self.expect(";")
        result = self.prob_block() if self.at("prob") else self.term()
        if self.tok.kind != "eof":
            self.fail(f"unexpected {self.describe(self.tok)}", ("end of input",))
        return result

    def parse_term_only(self) -> Term:
        t = self.term()
        if self.tok.kind != "eof":
            self.fail(f"unexpected {self.describe(self.tok)}", ("end of input",))
        return t

    # types
    def type_(self) -> Ty:
        left = self.prod_type()
        if self.at("->"):
            self.advance()
            return Fun(left, self.type_())
        return left

    def prod_type(self) -> Ty:
        left = self.atom_type()
        if self.at("x"):
            self.advance()
            return Prod(left, self.prod_type())
        return left

    def atom_type(self) -> Ty:
        if self.at("R"):
            self.advance()
            if self.at("^"):
                self.advance()
                t = self.tok
                if t.kind != "num" or not t.text.isdigit() or int(t.text) < 1:
                    self.fail("bad vector dimension", ("positive integer",))
                self.advance()
                return RealVec(int(t.text))
            return RealVec(1)
        if self.at("("):
            self.advance()
            ty = self.type_()
            self.expect(")")
            return ty
        self.fail(f"unexpected {self.describe(self.tok)}", ("'R'", "'('"))

    # terms
    def term(self) -> Term:
        if self.at("lam"):
            loc = self.loc()
            self.advance()
            x = self.binder()
            self.expect(":")
            ty = self.type_()
            self.expect(".")
            self.scope.append(x)
            body = self.term()
            self.scope.pop()
            return Lam(x, ty, body, loc=loc)
        if self.at("mu"):
            loc = self.loc()
            self.advance()
            f = self.binder()
            self.expect(":")
            ty = self.type_()
            if not isinstance(ty, Fun):
                raise ParseError(f"mu binder needs a function type, got {ty}", *loc)
            self.expect(".")
            self.scope.append(f)
            body = self.term()
            self.scope.pop()
            return Mu(f, ty, body, loc=loc)
        return self.sum_()

    def sum_(self) -> Term:
        left = self.prod_()
        while self.at("+") or self.at("-"):
            loc = self.loc()
            op = self.advance().text
            right = self.prod_()
            left = App(App(self.named_const(INFIX[op], loc), left, loc=loc), right, loc=loc)
        return left

    def prod_(self) -> Term:
        left = self.unary()
        while self.at("*") or self.at("/"):
            loc = self.loc()
            op = self.advance().text
            right = self.unary()
            left = App(App(self.named_const(INFIX[op], loc), left, loc=loc), right, loc=loc)
        return left

    def unary(self) -> Term:
        loc = self.loc()
        if self.at("-"):
            self.advance()
            if self.tok.kind == "num":
                return self.app_tail(self.number(negate=True))
            return App(self.named_const("neg", loc), self.unary(), loc=loc)
        if self.at("if"):
            self.advance()
            self.expect("(")
            guard = self.term()
            self.expect(">")
            t = self.tok
            if t.kind != "num" or float(t.text) != 0.0:
                self.fail("guards compare against 0", ("'0'",))
            self.advance()
            self.expect(")")
            then = self.atom()
            else_ = self.atom()
            return IfGtZero(guard, then, else_, loc=loc)
        return self.app_tail(self.atom())

    def starts_atom(self) -> bool:
        t = self.tok
        if t.kind == "num":
            return True
        if t.kind == "ident":
            return t.text not in KEYWORDS
        return t.kind == "sym" and t.text in ("(", "[")

    def app_tail(self, head: Term) -> Term:
        while self.starts_atom():
            loc = self.loc()
            head = App(head, self.atom(), loc=loc)
        return head

    def number(self, negate: bool = False) -> Const:
        loc = self.loc()
        x = float(self.advance().text)
        value = (-x if negate else x,)
        return Const(literal_name(value), RealVec(1), value, loc=loc)

    def atom(self) -> Term:
        t = self.tok
        loc = self.loc()
        if t.kind == "num":
            return self.number()
        if self.at("["):
            self.advance()
            xs = []
            while True:
                neg = False
                if self.at("-"):
                    self.advance()
                    neg = True
                if self.tok.kind != "num":
                    self.fail(f"unexpected {self.describe(self.tok)}", ("number",))
                x = float(self.advance().text)
                xs.append(-x if neg else x)
                if self.at(","):
                    self.advance()
                    continue
                self.expect("]")
                break
            value = tuple(xs)
            return Const(literal_name(value), RealVec(len(value)), value, loc=loc)
        if self.at("("):
            self.advance()
            items = [self.term()]
            while self.at(","):
                self.advance()
                items.append(self.term())
            self.expect(")")
            result = items[-1]
            for item in reversed(items[:-1]):
                result = App(App(Const("pair", None, loc=loc), item, loc=loc), result, loc=loc)
            return result
        if t.kind == "ident" and t.text not in KEYWORDS:
            return self.resolve(self.advance(), loc)
        self.fail(f"unexpected {self.describe(t)}", ("identifier", "number", "'('", "'['"))

    def named_const(self, name: str, loc) -> Const:
        spec = self.table.lookup(name)
        return Const(name, spec.ty, loc=loc)

    def resolve(self, tok: Token, loc) -> Term:
        name = tok.text
        if name in self.scope:
            return Var(name, loc=loc)
        if name in self.lets:
            return self.lets[name]
        if self.use_prelude and name in PRELUDE_SOURCE:
            return prelude_term(name)
        spec = self.table.lookup(name)
        if isinstance(spec, FamilySpec):
            if self.at("<"):
                self.advance()
                params = [self.type_()]
                while self.at(","):
                    self.advance()
                    params.append(self.type_())
                self.expect(">")
                if len(params) != spec.n_params:
                    raise ParseError(f"{name} takes {spec.n_params} type parameter(s)", *loc)
                try:
                    ty = spec.instance(tuple(params))
                except (AttributeError, ValueError):
                    raise ParseError(f"bad instance for {name}", *loc) from None
                return Const(name, ty, loc=loc)
            return Const(name, None, loc=loc)
        if isinstance(spec, ConstSpec):
            return Const(name, spec.ty, loc=loc)
        raise ScopeError(name, *loc)

    # probabilistic blocks
    def prob_block(self) -> ProbTerm:
        self.expect("prob")
        self.expect("{")
        stmts = []
        pushed = 0
        while True:
            var = None
            if self.tok.kind == "ident" and self.peek().text == "<-":
                var = self.binder()
                self.advance()
            stmts.append((var, self.prob_expr()))
            if var is not None:
                self.scope.append(var)
                pushed += 1
            if self.at(";"):
                self.advance()
                if self.at("}"):
                    break
                continue
            break
        self.expect("}")
        del self.scope[len(self.scope) - pushed:]
        if stmts[-1][0] is not None:
            raise ParseError("a prob block cannot end with a binding", self.tok.line, self.tok.col)
        result = stmts[-1][1]
        for var, p in reversed(stmts[:-1]):
            result = PDo(var or "_", p, result)
        return result

    def prob_expr(self) -> ProbTerm:
        if self.at("sample"):
            self.advance()
            return PSample()
        if self.at("score"):
            self.advance()
            return PScore(self.term())
        if self.at("return"):
            self.advance()
            return PReturn(self.term())
        if self.at("prob"):
            return self.prob_block()
        self.fail(f"unexpected {self.describe(self.tok)}", ("'sample'", "'score'", "'return'", "'prob'"))


def parse(text: str, table: ConstTable = DEFAULT_TABLE):
    """Parse a program: optional ``let`` bindings then a term or ``prob`` block."""
    return Parser(text, table).parse_program()


def parse_term(text: str, table: ConstTable = DEFAULT_TABLE) -> Term:
    t = parse(text, table)
    if not isinstance(t, Term):
        raise ParseError("expected a core term, found a prob block")
    return t


def parse_type(text: str) -> Ty:
    p = Parser(text)
    ty = p.type_()
    if p.tok.kind != "eof":
        p.fail(f"unexpected {p.describe(p.tok)}", ("end of input",))
    return ty


# -- pretty printer -------------------------------------------------------

# precedence levels
_TERM, _SUM, _PROD, _UNARY, _APP, _ATOM = range(6)
_OP_LEVEL = {"add": _SUM, "sub": _SUM, "mul": _PROD, "div": _PROD}


def _wrap(s: str, own: int, need: int) -> str:
    return f"({s})" if own < need else s


def _show_const(c: Const) -> str:
    if c.value is not None:
        return f"({c.name})" if c.name.startswith("-") else c.name
    spec = DEFAULT_TABLE.lookup(c.name)
    if isinstance(spec, FamilySpec) and c.ty is not None:
        return f"{c.name}<{', '.join(show_type(p) for p in spec.params(c.ty))}>"
    return c.name


def pretty(t: Term, need: int = _TERM) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Const):
        return _show_const(t)
    if isinstance(t, App):
        head, args = spine(t)
        if isinstance(head, Const) and head.value is None:
            if head.name in INFIX_OF and len(args) == 2:
                level = _OP_LEVEL[head.name]
                s = f"{pretty(args[0], level)} {INFIX_OF[head.name]} {pretty(args[1], level + 1)}"
                return _wrap(s, level, need)
            if head.name == "neg" and len(args) == 1:
                inner = pretty(args[0], _UNARY)
                if inner[:1].isdigit() or inner.startswith("-"):
                    inner = f"({inner})"
                return _wrap("-" + inner, _UNARY, need)
            if head.name == "pair" and head.ty is None and len(args) == 2:
                return f"({pretty(args[0])}, {pretty(args[1])})"
        s = f"{pretty(t.fn, _APP)} {pretty(t.arg, _ATOM)}"
        return _wrap(s, _APP, need)
    if isinstance(t, IfGtZero):
        s = f"if ({pretty(t.guard)} > 0) {pretty(t.then, _ATOM)} {pretty(t.else_, _ATOM)}"
        return _wrap(s, _UNARY, need)
    if isinstance(t, Lam):
        return _wrap(f"lam {t.param} : {show_type(t.param_ty)}. {pretty(t.body)}", _TERM, need)
    if isinstance(t, Mu):
        return _wrap(f"mu {t.fname} : {show_type(t.fty)}. {pretty(t.body)}", _TERM, need)
    raise TypeError(f"not a term: {t!r}")


def _prob_stmts(p: ProbTerm) -> Iterator[str]:
    while isinstance(p, PDo):
        first = pretty_prob(p.first)
        yield first if p.var == "_" else f"{p.var} <- {first}"
        p = p.rest
    yield pretty_prob(p)


def pretty_prob(p: ProbTerm) -> str:
    if isinstance(p, PSample):
        return "sample"
    if isinstance(p, PScore):
        return f"score {pretty(p.expr)}"
    if isinstance(p, PReturn):
        return f"return {pretty(p.expr)}"
    if isinstance(p, PDo):
        return "prob { " + "; ".join(_prob_stmts(p)) + " }"
    raise TypeError(f"not a prob term: {p!r}")


def pretty_program(p) -> str:
    if isinstance(p, ProbTerm):
        s = pretty_prob(p)
        return s if s.startswith("prob") else "prob { " + s + " }"
    return pretty(p)


# -- alpha equivalence ----------------------------------------------------

def alpha_eq(a: Term, b: Term) -> bool:
    def go(a, b, env_a, env_b, depth):
        if type(a) is not type(b):
            return False
        if isinstance(a, Var):
            ia, ib = env_a.get(a.name), env_b.get(b.name)
            if ia is None and ib is None:
                return a.name == b.name
            return ia == ib
        if isinstance(a, Const):
            return a.name == b.name and a.ty == b.ty and a.value == b.value
        if isinstance(a, App):
            return go(a.fn, b.fn, env_a, env_b, depth) and go(a.arg, b.arg, env_a, env_b, depth)
        if isinstance(a, IfGtZero):
            return (go(a.guard, b.guard, env_a, env_b, depth)
                    and go(a.then, b.then, env_a, env_b, depth)
                    and go(a.else_, b.else_, env_a, env_b, depth))
        if isinstance(a, Lam):
            return a.param_ty == b.param_ty and go(
                a.body, b.body, {**env_a, a.param: depth}, {**env_b, b.param: depth}, depth + 1)
        if isinstance(a, Mu):
            return a.fty == b.fty and go(
                a.body, b.body, {**env_a, a.fname: depth}, {**env_b, b.fname: depth}, depth + 1)
        raise TypeError(f"not a term: {a!r}")

    return go(a, b, {}, {}, 0)


def iter_nodes(t: Term) -> Iterator[Term]:
    stack = [t]
    while stack:
        n = stack.pop()
        yield n
        if isinstance(n, App):
            stack += [n.arg, n.fn]
        elif isinstance(n, IfGtZero):
            stack += [n.else_, n.then, n.guard]
        elif isinstance(n, (Lam, Mu)):
            stack.append(n.body)


def skeleton(t: Term):
    """The Mu/IfGtZero control skeleton as a nested tuple."""
    if isinstance(t, (Var, Const)):
        return ()
    if isinstance(t, App):
        return skeleton(t.fn) + skeleton(t.arg)
    if isinstance(t, Lam):
        return skeleton(t.body)
    if isinstance(t, Mu):
        return (("mu", skeleton(t.body)),)
    if isinstance(t, IfGtZero):
        return (("if", skeleton(t.guard), skeleton(t.then), skeleton(t.else_)),)
    raise TypeError(f"not a term: {t!r}")
