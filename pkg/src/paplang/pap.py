"""Piecewise-analytic representations and the derivative oracle.

``extract_rep`` enumerates the execution paths of a first-order program
symbolically.  Each completed path becomes a piece: the conjunction of the
branch and domain conditions met along it, paired with the branch-free
outputs.  Programs are treated over their flattened input coordinates, so a
program of type ``R x R -> R`` has a representation on R^2.

Pieces carry symbolic Jacobians (``intensional_derivative``), and
``ae_check`` compares AD tangents against central differences away from
guard crossings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._deep import run_deep
from .ad import input_output_types, jacobian as ad_jacobian
from .constants import DEFAULT_TABLE, ConstTable
from .errors import BudgetExceeded, Diverged, MultiplePieces, NotFirstOrder, OffDomain
from .evaluator import default_fuel, run
from .symbolic import (
    NoBranchChooser,
    Path,
    PointChooser,
    Sym,
    Unresolved,
    diff,
    enumerate_paths,
    evaluate,
    run_path,
    show_sym,
    substitute,
    to_term,
)
from .syntax import Lam, Term, Var, app, const, pretty
from .types import R, RealVec, flat_dim
from .values import Bottom, Bottomed, flatten, unflatten

UNDEFINED = type("Undefined", (), {"__repr__": lambda self: "Undefined", "__bool__": lambda self: False})()
"""Result of ``contains`` when some guard is itself undefined at the point."""


def _arg_var(n: int) -> tuple[Term, bool]:
    return Var("x"), n == 1


def _lam(n: int, body: Term) -> Term:
    return Lam("x", R if n == 1 else RealVec(n), body)


@dataclass(frozen=True)
class AnalyticSet:
    """{x in R^dim | g(x) > 0 for strict guards, g(x) <= 0 for the others}.

    ``guards`` keeps ``(g, strict)`` pairs in the order they were met.
    """

    guards: tuple
    dim: int

    @property
    def strict(self) -> tuple[Sym, ...]:
        return tuple(g for g, s in self.guards if s)

    @property
    def nonstrict(self) -> tuple[Sym, ...]:
        return tuple(g for g, s in self.guards if not s)

    @property
    def strict_guards(self) -> list[Term]:
        return [self._term(g) for g in self.strict]

    @property
    def nonstrict_guards(self) -> list[Term]:
        return [self._term(g) for g in self.nonstrict]

    def _term(self, g: Sym) -> Term:
        x, scalar = _arg_var(self.dim)
        return _lam(self.dim, to_term(g, x, scalar))

    @classmethod
    def from_terms(cls, dim: int, strict: Sequence[Term] = (), nonstrict: Sequence[Term] = (),
                   table: ConstTable = DEFAULT_TABLE) -> "AnalyticSet":
        """Build a set from guard terms ``R^dim -> R`` free of branches and recursion."""
        in_ty = R if dim == 1 else RealVec(dim)
        guards = []
        for terms, s in ((strict, True), (nonstrict, False)):
            for t in terms:
                (g,) = run_deep(run_path, t, in_ty, NoBranchChooser(), 0, table)
                guards.append((g, s))
        return cls(tuple(guards), dim)

    def show(self) -> str:
        if not self.guards:
            return "everywhere"
        return ", ".join(f"{show_sym(g)} {'>' if s else '<='} 0" for g, s in self.guards)


def contains(s: AnalyticSet, x: Sequence[float]):
    """True, False, or UNDEFINED when some guard bottoms at ``x``."""
    if len(x) != s.dim:
        raise ValueError(f"point of dimension {len(x)} for a set in R^{s.dim}")
    memo: dict = {}
    ok = True
    for g, strict in s.guards:
        try:
            v = evaluate(g, x, memo)
        except Bottomed:
            return UNDEFINED
        if (v <= 0.0) if strict else (v > 0.0):
            ok = False
    return ok


@dataclass(frozen=True)
class Piece:
    set: AnalyticSet
    outputs: tuple

    def fn(self, x: Sequence[float]) -> tuple:
        memo: dict = {}
        try:
            return tuple(evaluate(e, x, memo) for e in self.outputs)
        except Bottomed as b:
            raise OffDomain(f"piece undefined at {tuple(x)}: {b}") from None

    @property
    def fn_term(self) -> Term:
        n = self.set.dim
        x, scalar = _arg_var(n)
        parts = [to_term(e, x, scalar) for e in self.outputs]
        body = parts[-1]
        for p in reversed(parts[:-1]):
            body = app(const("concat"), p, body)
        return _lam(n, body)

    def show(self) -> str:
        outs = ", ".join(show_sym(e) for e in self.outputs)
        return f"{{{self.set.show()}}} -> ({outs})"


@dataclass(frozen=True)
class PiecewiseRep:
    pieces: tuple
    dim_in: int
    dim_out: int
    unresolved: tuple = ()

    def __len__(self) -> int:
        return len(self.pieces)

    def containing(self, x) -> list[int]:
        return [i for i, p in enumerate(self.pieces) if contains(p.set, x) is True]

    def show(self) -> str:
        lines = [f"piece {i}: {p.show()}" for i, p in enumerate(self.pieces)]
        for u in self.unresolved:
            lines.append(f"unresolved: {{{u.show()}}}")
        return "\n".join(lines)


def _locate(r: PiecewiseRep, x) -> int:
    hits = r.containing(x)
    if len(hits) > 1:
        raise MultiplePieces(f"pieces {hits} all contain {tuple(x)}")
    if not hits:
        raise OffDomain(f"no piece contains {tuple(x)}")
    return hits[0]


def pw_eval(r: PiecewiseRep, x: Sequence[float]) -> tuple:
    x = tuple(float(v) for v in x)
    return r.pieces[_locate(r, x)].fn(x)


def program_dims(t: Term, table: ConstTable = DEFAULT_TABLE) -> tuple[int, int]:
    a, b = input_output_types(t, table)
    return flat_dim(a), flat_dim(b)


def extract_rep(t: Term, budget: int = 8, partial: bool = False, max_paths: int = 20000,
                table: ConstTable = DEFAULT_TABLE) -> PiecewiseRep:
    """Piecewise representation of closed first-order ``t``, unrolling each μ ``budget`` times.

    Paths still blocked on a recursive call raise BudgetExceeded unless
    ``partial`` is set, in which case they are listed in ``rep.unresolved``.
    """
    in_ty, out_ty = input_output_types(t, table)  # raises NotFirstOrder
    n, m = flat_dim(in_ty), flat_dim(out_ty)

    def go():
        return enumerate_paths(lambda ch: run_path(t, in_ty, ch, budget, table), max_paths)

    completed, blocked, truncated = run_deep(go)
    pieces = tuple(Piece(AnalyticSet(tuple(g), n), out) for g, out in completed)
    unresolved = tuple(AnalyticSet(tuple(g), n) for g in blocked)
    rep = PiecewiseRep(pieces, n, m, unresolved)
    if truncated:
        raise BudgetExceeded(unresolved, rep, f"path enumeration stopped after {max_paths} paths")
    if unresolved and not partial:
        raise BudgetExceeded(unresolved, rep)
    return rep


def local_piece(t: Term, x: Sequence[float], fuel: int | None = None,
                table: ConstTable = DEFAULT_TABLE) -> Piece:
    """The piece of the path that ``x`` follows.

    This is the piece ``extract_rep`` with budget ``fuel`` would list for
    ``x``, computed without enumerating the others.  Raises Diverged when
    the program bottoms at ``x``.
    """
    in_ty, _ = input_output_types(t, table)
    fuel = default_fuel() if fuel is None else fuel
    x = tuple(float(v) for v in x)

    def go():
        ch = PointChooser(x)
        try:
            out = run_path(t, in_ty, ch, fuel, table, check_point=True)
        except Unresolved as u:
            return Bottom("FuelExhausted", str(u))
        except Bottomed as b:
            return Bottom(b.reason, b.detail)
        return Piece(AnalyticSet(tuple(ch.path.guards), len(x)), out)

    p = run_deep(go)
    if isinstance(p, Bottom):
        raise Diverged(p, x)
    return p


def compose(rf: PiecewiseRep, rg: PiecewiseRep) -> PiecewiseRep:
    """Representation of g ∘ f from representations of f and g."""
    if rf.dim_out != rg.dim_in:
        raise ValueError(f"cannot compose: f lands in R^{rf.dim_out}, g expects R^{rg.dim_in}")
    pieces = []
    for a in rf.pieces:
        for b in rg.pieces:
            memo: dict = {}
            path = Path()
            try:
                for g, s in a.set.guards:
                    path.add(g, s)
                for g, s in b.set.guards:
                    h = substitute(g, a.outputs, memo)
                    if h.op == "lit":
                        if (h.val > 0.0) != s:
                            raise Bottomed("DomainError", "empty refinement")
                        continue
                    path.add(h, s)
                outs = tuple(substitute(e, a.outputs, memo) for e in b.outputs)
            except Bottomed:
                continue
            pieces.append(Piece(AnalyticSet(tuple(path.guards), rf.dim_in), outs))
    return PiecewiseRep(tuple(pieces), rf.dim_in, rg.dim_out, rf.unresolved)


def _piece_jacobian(p: Piece) -> tuple:
    n = p.set.dim
    rows = []
    for e in p.outputs:
        rows.append(tuple(diff(e, j, {}) for j in range(n)))
    return tuple(rows)


@dataclass(frozen=True)
class IntensionalDeriv:
    rep: PiecewiseRep
    jacobians: tuple

    def jacobian_terms(self, i: int) -> list[list[Term]]:
        n = self.rep.dim_in
        x, scalar = _arg_var(n)
        return [[_lam(n, to_term(e, x, scalar)) for e in row] for row in self.jacobians[i]]


def intensional_derivative(r: PiecewiseRep) -> IntensionalDeriv:
    return IntensionalDeriv(r, tuple(_piece_jacobian(p) for p in r.pieces))


def _eval_matrix(rows, x) -> np.ndarray:
    memo: dict = {}
    try:
        return np.array([[evaluate(e, x, memo) for e in row] for row in rows], dtype=float)
    except Bottomed as b:
        raise OffDomain(f"Jacobian undefined at {tuple(x)}: {b}") from None


def intensional_jacobian(d: IntensionalDeriv, x: Sequence[float]) -> np.ndarray:
    """Jacobian of the active piece at ``x`` (shape m x n)."""
    x = tuple(float(v) for v in x)
    return _eval_matrix(d.jacobians[_locate(d.rep, x)], x)


def piece_jacobian(p: Piece, x: Sequence[float]) -> np.ndarray:
    return _eval_matrix(_piece_jacobian(p), tuple(float(v) for v in x))


def eval_point(t: Term, x: Sequence[float], fuel: int | None = None,
               table: ConstTable = DEFAULT_TABLE):
    """Run ``t`` on the flat input ``x``: a tuple of outputs, or a Bottom."""
    in_ty, _ = input_output_types(t, table)
    out = run(t, [unflatten(in_ty, [float(v) for v in x])], fuel, table)
    if isinstance(out, Bottom):
        return out
    return flatten(out.value)


def eval_points(t: Term, xs, fuel: int | None = None, table: ConstTable = DEFAULT_TABLE) -> list:
    """``eval_point`` over many inputs in one worker job."""
    return run_deep(lambda: [eval_point(t, x, fuel, table) for x in xs])


def steps(x: Sequence[float], h: float) -> np.ndarray:
    return h * np.maximum(1.0, np.abs(np.asarray(x, dtype=float)))


def finite_diff(t: Term, x: Sequence[float], h: float = 1e-6, fuel: int | None = None,
                table: ConstTable = DEFAULT_TABLE) -> np.ndarray:
    """Central differences with step h * max(1, |x_j|) along each coordinate."""
    x = np.asarray(x, dtype=float)
    hs = steps(x, h)
    cols = []
    for j in range(len(x)):
        vals = []
        for s in (1.0, -1.0):
            xp = x.copy()
            xp[j] += s * hs[j]
            out = eval_point(t, xp, fuel, table)
            if isinstance(out, Bottom):
                raise Diverged(out, tuple(xp))
            vals.append(np.array(out))
        cols.append((vals[0] - vals[1]) / (2.0 * hs[j]))
    return np.stack(cols, axis=1)


def near_boundary(p: Piece, x: Sequence[float], h: float = 1e-6) -> bool:
    """Whether leaving ``x`` by up to one FD step along some axis can leave the piece."""
    x = np.asarray(x, dtype=float)
    hs = steps(x, h)
    for j in range(len(x)):
        for s in (1.0, -1.0, 0.5, -0.5):
            xp = x.copy()
            xp[j] += s * hs[j]
            if contains(p.set, tuple(xp)) is not True:
                return True
    return False


def is_boundary(t: Term, x: Sequence[float], h: float = 1e-6, fuel: int | None = None,
                table: ConstTable = DEFAULT_TABLE) -> bool:
    return near_boundary(local_piece(t, x, fuel, table), x, h)


@dataclass
class Report:
    passed: int = 0
    failed: int = 0
    boundary: int = 0
    undefined: int = 0
    worst_abs_err: float = 0.0
    failures: list = field(default_factory=list)

    @property
    def total(self) -> int:
        return self.passed + self.failed + self.boundary + self.undefined

    def merge(self, other: "Report") -> "Report":
        return Report(
            self.passed + other.passed,
            self.failed + other.failed,
            self.boundary + other.boundary,
            self.undefined + other.undefined,
            max(self.worst_abs_err, other.worst_abs_err),
            self.failures + other.failures,
        )

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "failed": self.failed,
            "boundary": self.boundary,
            "undefined": self.undefined,
            "worst_abs_err": self.worst_abs_err,
        }


def check_point(t: Term, x: Sequence[float], tol: float = 1e-4, h: float = 1e-6,
                fuel: int | None = None, table: ConstTable = DEFAULT_TABLE) -> Report:
    """The a.e. check at a single point."""
    x = tuple(float(v) for v in x)
    try:
        piece = local_piece(t, x, fuel, table)
    except Diverged:
        return Report(undefined=1)
    if near_boundary(piece, x, h):
        return Report(boundary=1)
    res = ad_jacobian(t, x, fuel, table)
    if isinstance(res, Bottom):
        return Report(undefined=1)
    try:
        fd = finite_diff(t, x, h, fuel, table)
    except Diverged:
        return Report(undefined=1)
    err = float(np.max(np.abs(np.array(res[1], dtype=float) - fd))) if fd.size else 0.0
    if err <= tol:
        return Report(passed=1, worst_abs_err=err)
    return Report(failed=1, worst_abs_err=err, failures=[(x, res[1], fd.tolist())])


def ae_check(t: Term, sampler: Callable[[np.random.Generator], Sequence[float]], count: int,
             tol: float = 1e-4, rng: np.random.Generator | None = None, h: float = 1e-6,
             fuel: int | None = None, table: ConstTable = DEFAULT_TABLE) -> Report:
    """Compare AD against central differences at ``count`` sampled points.

    Points whose FD stencil can cross a guard of the active piece are
    counted as ``boundary`` and exempt; points where the program bottoms
    are counted as ``undefined``.
    """
    if not _is_first_order(t, table):
        raise NotFirstOrder("ae_check needs a first-order program")
    rng = np.random.default_rng(0) if rng is None else rng
    report = Report()
    for _ in range(count):
        report = report.merge(check_point(t, sampler(rng), tol, h, fuel, table))
    return report


def _is_first_order(t: Term, table: ConstTable) -> bool:
    try:
        input_output_types(t, table)
    except NotFirstOrder:
        return False
    return True


def uniform_sampler(lo, hi, n: int = 1) -> Callable[[np.random.Generator], np.ndarray]:
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (n,))
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (n,))
    return lambda rng: rng.uniform(lo, hi)


def constant_sampler(x) -> Callable[[np.random.Generator], np.ndarray]:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return lambda rng: x.copy()


def disjointness_violations(r: PiecewiseRep, points) -> list:
    """Sampled points that lie in more than one piece."""
    return [tuple(x) for x in points if len(r.containing(tuple(float(v) for v in x))) > 1]


def agreement_violations(r: PiecewiseRep, t: Term, points, fuel: int | None = None,
                         table: ConstTable = DEFAULT_TABLE) -> list:
    """Points where the representation and the evaluator disagree (bit for bit).

    Points outside every piece are skipped; a point inside a piece where
    eval bottoms counts as a violation.
    """
    bad = []
    for x in points:
        x = tuple(float(v) for v in x)
        try:
            y = pw_eval(r, x)
        except OffDomain:
            continue
        z = eval_point(t, x, fuel, table)
        if isinstance(z, Bottom) or not all(_same_bits(a, b) for a, b in zip(y, z)):
            bad.append((x, y, z))
    return bad


def _same_bits(a: float, b: float) -> bool:
    return a == b and math.copysign(1.0, a) == math.copysign(1.0, b)


def show_rep(r: PiecewiseRep) -> str:
    out = [r.show()]
    for i, p in enumerate(r.pieces):
        out.append(f"fn {i}: {pretty(p.fn_term)}")
    return "\n".join(out)


__all__ = [
    "UNDEFINED", "AnalyticSet", "Piece", "PiecewiseRep", "IntensionalDeriv", "Report",
    "contains", "pw_eval", "extract_rep", "local_piece", "compose", "intensional_derivative",
    "intensional_jacobian", "piece_jacobian", "finite_diff", "near_boundary", "is_boundary",
    "ae_check", "check_point", "eval_point", "eval_points", "uniform_sampler", "constant_sampler",
    "disjointness_violations", "agreement_violations", "show_rep",
]
