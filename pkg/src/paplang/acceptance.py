"""The acceptance suite: one function per criterion, shared by the tests and the CLI.

Each criterion returns a :class:`Result` carrying pass/fail, a one-line
summary and any counterexamples found.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ._deep import run_deep
from .ad import derivative, input_output_types
from .corpus import CorpusEntry, entry, load
from .cov import DensityQuery, mc_verify, pushforward_density, uniform
from .errors import BudgetExceeded
from .evaluator import run
from .pap import (
    ae_check,
    constant_sampler,
    extract_rep,
    finite_diff,
    intensional_derivative,
    intensional_jacobian,
    near_boundary,
)
from .ppl import density_gradient, density_term, trace_density
from .syntax import parse
from .values import Bottom, Halt, flatten, real, unflatten

FUELS = tuple(2 ** i for i in range(11))  # 1, 2, 4, ..., 1024
SEED = 42


@dataclass
class Result:
    number: int
    title: str
    ok: bool
    summary: str
    seconds: float = 0.0
    counterexamples: list = field(default_factory=list)

    def line(self) -> str:
        return f"[{'PASS' if self.ok else 'FAIL'}] {self.number:>2}. {self.title}: {self.summary} ({self.seconds:.1f}s)"


def _timed(number: int, title: str):
    def wrap(fn):
        def run_criterion(seed: int = SEED) -> Result:
            t0 = time.perf_counter()
            ok, summary, cex = run_deep(fn, np.random.default_rng(seed + number), seed)
            return Result(number, title, ok, summary, time.perf_counter() - t0, cex)

        run_criterion.__name__ = fn.__name__
        run_criterion.__doc__ = fn.__doc__
        return run_criterion

    return wrap


def _bits(a: tuple, b: tuple) -> bool:
    return len(a) == len(b) and all(
        x == y and math.copysign(1.0, x) == math.copysign(1.0, y) for x, y in zip(a, b))


def _arg(e: CorpusEntry, x):
    in_ty, _ = input_output_types(e.term)
    return unflatten(in_ty, x)


@lru_cache(maxsize=4)
def _parity_sweep(seed: int) -> tuple:
    """Run primal and dual side by side over the corpus, fuels and 100 inputs each."""
    rng = np.random.default_rng(seed)
    parity, primal = [], []
    checked = 0
    for e in load():
        xs = e.samples(rng, 100)
        for x in xs:
            x = tuple(float(v) for v in x)
            d = tuple(float(v) for v in rng.normal(size=len(x)))
            arg = _arg(e, x)
            for n in FUELS:
                p = run(e.term, [arg], n)
                q = derivative(e.term, x, d, n)
                checked += 1
                if isinstance(p, Bottom) != isinstance(q, Bottom):
                    parity.append((e.name, x, n, p, q))
                elif isinstance(p, Bottom):
                    if p.reason != q.reason:
                        parity.append((e.name, x, n, p, q))
                elif not _bits(flatten(p.value), q.primal):
                    primal.append((e.name, x, n, flatten(p.value), q.primal))
    return checked, parity, primal


@_timed(1, "halting parity")
def criterion_1(rng, seed):
    checked, parity, _ = run_deep(_parity_sweep, seed + 1)
    return not parity, f"{checked} runs over {len(load())} programs, {len(parity)} mismatches", parity[:5]


@_timed(2, "primal preservation")
def criterion_2(rng, seed):
    checked, _, primal = run_deep(_parity_sweep, seed + 1)
    return not primal, f"{checked} runs, {len(primal)} primal mismatches", primal[:5]


@_timed(3, "a.e. derivative correctness")
def criterion_3(rng, seed):
    bad = []
    lines = []
    for e in load():
        if "total" not in e.tags:
            continue
        rep = ae_check(e.term, e.sample, 1000, tol=1e-4, rng=rng)
        frac = rep.boundary / max(1, rep.total)
        if rep.failed or frac >= 0.01 or rep.undefined:
            bad.append((e.name, rep.as_dict(), rep.failures[:3]))
        lines.append(rep)
    worst = max(r.worst_abs_err for r in lines)
    return not bad, f"{len(lines)} total programs x 1000 points, worst |AD-FD| {worst:.2e}, {len(bad)} bad", bad


@_timed(4, "measure-zero AD failure")
def criterion_4(rng, seed):
    e = entry("identity_branches")
    t = e.term
    tangent = derivative(t, (0.0,), (1.0,))
    fd = finite_diff(t, (0.0,))[0, 0]
    rep = ae_check(t, constant_sampler(0.0), 1, rng=rng)
    ok = (
        isinstance(tangent, Bottom) is False
        and tangent.tangent == (0.0,)
        and abs(fd - 1.0) <= 1e-6
        and rep.boundary == 1 and rep.passed == 0 and rep.failed == 0
    )
    return ok, f"AD tangent {tangent.tangent[0]}, FD {fd:.9f}, boundary {rep.boundary}/1", []


def _rel_err(ad: np.ndarray, jac: np.ndarray, d: np.ndarray) -> float:
    """||ad - J d|| relative to ||J|| ||d|| (infinity norms)."""
    scale = float(np.max(np.abs(jac).sum(axis=1))) * float(np.max(np.abs(d))) if jac.size else 0.0
    err = float(np.max(np.abs(ad - jac @ d))) if ad.size else 0.0
    if scale == 0.0:
        return 0.0 if err == 0.0 else math.inf
    return err / scale


@_timed(5, "oracle equivalence")
def criterion_5(rng, seed):
    bad = []
    worst = 0.0
    for e in load():
        rep = extract_rep(e.term, e.budget, partial=True)
        deriv = intensional_derivative(rep)
        got = tries = 0
        while got < 500 and tries < 20000:
            tries += 1
            x = tuple(float(v) for v in e.sample(rng))
            hits = rep.containing(x)
            if len(hits) != 1:
                continue
            piece = rep.pieces[hits[0]]
            if near_boundary(piece, x):
                continue
            d = rng.normal(size=len(x))
            res = derivative(e.term, x, tuple(d))
            if isinstance(res, Bottom):
                bad.append((e.name, x, "AD bottomed inside a piece", res))
                continue
            jac = intensional_jacobian(deriv, x)
            err = _rel_err(np.array(res.tangent), jac, d)
            worst = max(worst, err)
            if err > 1e-9:
                bad.append((e.name, x, err))
            got += 1
        if got < 500:
            bad.append((e.name, f"only {got} usable points"))
    return not bad, f"{len(load())} programs x 500 points, worst relative error {worst:.2e}", bad[:5]


CANTOR_FIXED = (0.25, 0.75, 1.0 / 13.0)
CANTOR_MAX_FUEL = 10_000


@lru_cache(maxsize=2)
def _cantor(seed: int) -> dict:
    rng = np.random.default_rng(seed)
    t = entry("cantor").term
    halting = []
    for x in rng.uniform(0.0, 1.0, 100):
        out = run(t, [real(x)], 200)
        if not (isinstance(out, Halt) and abs(out.value.xs[0] - x * x) <= 1e-12):
            halting.append((float(x), out))
    # Fuel exhaustion at fuel N implies it at every smaller fuel (Kleene chain,
    # criterion 11); the small fuels are also run outright.
    fuels = list(range(0, 201)) + [2 ** i for i in range(8, 14)] + [CANTOR_MAX_FUEL]
    fixed = {}
    for x in CANTOR_FIXED:
        fixed[x] = [n for n in fuels
                    if not (isinstance(o := run(t, [real(x)], n), Bottom) and o.reason == "FuelExhausted")]
    return {"halting": halting, "fixed": fixed}


def cantor_halting(seed: int = SEED) -> tuple[bool, str]:
    r = run_deep(_cantor, seed + 6)
    return not r["halting"], f"{100 - len(r['halting'])}/100 non-Cantor points halt with x^2"


def cantor_fixed_point(x: float, seed: int = SEED) -> tuple[bool, str]:
    r = run_deep(_cantor, seed + 6)
    bad = r["fixed"][x]
    if not bad:
        return True, f"x={x!r}: FuelExhausted at every fuel <= {CANTOR_MAX_FUEL}"
    return False, f"x={x!r}: halts from fuel {bad[0]}"


@_timed(6, "cantor behaviour")
def criterion_6(rng, seed):
    ok_h, msg_h = cantor_halting(seed)
    parts = [cantor_fixed_point(x, seed) for x in CANTOR_FIXED]
    ok = ok_h and all(p[0] for p in parts)
    return ok, "; ".join([msg_h] + [p[1] for p in parts]), [p[1] for p in parts if not p[0]]


@_timed(7, "PPL density clauses")
def criterion_7(rng, seed):
    g = entry("gaussian").program
    a = trace_density(g, [0.3])
    b = trace_density(g, [0.3, 0.4])
    c = trace_density(parse("prob { return 1.0 }"), [])
    ok = abs(a - math.exp(-0.09)) <= 1e-12 and b == 0.0 and c == 1.0
    return ok, f"gaussian [0.3] -> {a!r}, leftover -> {b!r}, return [] -> {c!r}", []


@_timed(8, "density normalisation")
def criterion_8(rng, seed):
    p = entry("two_samples").program
    n = 100_000
    vals = np.array([trace_density(p, tr) for tr in rng.uniform(0.0, 1.0, size=(n, 2))])
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(n))
    ok = abs(mean - 1.0) <= 3 * se
    return ok, f"integral {mean!r} +- {se:.2e} (3 SE)", []


@_timed(9, "density differentiability")
def criterion_9(rng, seed):
    e = entry("gaussian")
    t = density_term(e.program, 1)
    bad = []
    worst = 0.0
    for x in rng.uniform(-3.0, 3.0, 1000):
        g = density_gradient(e.program, [x])
        fd = finite_diff(t, [x])[0]
        err = float(np.max(np.abs(g - fd)))
        worst = max(worst, err)
        if err > 1e-4:
            bad.append((float(x), g.tolist(), fd.tolist()))
    try:
        rep = extract_rep(t, 4)
        rep_ok, rep_msg = True, f"{len(rep)} piece(s)"
    except BudgetExceeded as exc:
        rep_ok, rep_msg = False, str(exc)
    return not bad and rep_ok, f"1000 traces, worst |grad-FD| {worst:.2e}; extract_rep: {rep_msg}", bad[:5]


COV_PROGRAMS = ("piecewise_linear", "identity", "identity_branches")


@_timed(10, "change of variables")
def criterion_10(rng, seed):
    f = entry("piecewise_linear").term
    mu = uniform(-1.0, 1.0)
    d1 = pushforward_density(DensityQuery(mu, f, (1.0,)))
    d2 = pushforward_density(DensityQuery(mu, f, (-1.5,)))
    ok = abs(d1 - 0.25) <= 1e-12 and abs(d2 - 1.0 / 6.0) <= 1e-12
    tvs = {}
    for name in COV_PROGRAMS:
        rep = mc_verify(mu, entry(name).term, 100_000, 50, rng)
        tvs[name] = rep.tv_distance
        ok = ok and rep.tv_distance < 0.02
    tv = ", ".join(f"{k} {v:.4f}" for k, v in tvs.items())
    return ok, f"densities {d1!r}, {d2!r}; TV {tv}", []


@_timed(11, "fuel monotonicity")
def criterion_11(rng, seed):
    bad = []
    for e in load():
        n = e.budget
        for x in e.samples(rng, 20):
            arg = _arg(e, tuple(float(v) for v in x))
            outs = [run(e.term, [arg], m) for m in (n, n + 1, n + 17)]
            for lo, hi in zip(outs, outs[1:]):
                if isinstance(lo, Halt) and not (isinstance(hi, Halt) and _bits(flatten(lo.value), flatten(hi.value))):
                    bad.append((e.name, tuple(x), lo, hi))
    return not bad, f"{len(load())} programs x 20 inputs at fuels (n, n+1, n+17)", bad[:5]


CRITERIA = (
    criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
    criterion_7, criterion_8, criterion_9, criterion_10, criterion_11,
)


def run_all(seed: int = SEED, only=None) -> list[Result]:
    out = []
    for i, c in enumerate(CRITERIA, start=1):
        if only and i not in only:
            continue
        out.append(c(seed))
    return out


__all__ = ["Result", "CRITERIA", "run_all", "cantor_halting", "cantor_fixed_point", "CANTOR_FIXED"]
