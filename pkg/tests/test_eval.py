import math

import numpy as np
from hypothesis import given, strategies as st

from paplang.ad import input_output_types
from paplang.constants import ConstSpec, default_table
from paplang.corpus import entry
from paplang.evaluator import apply, default_fuel, eval, run
from paplang.syntax import parse
from paplang.types import Fun, R
from paplang.values import Bottom, Halt, Pair, Reals, real, unflatten

from conftest import FACTORIAL

FACT = parse(FACTORIAL)


def test_factorial_three():
    assert run(FACT, [real(3.0)], 10) == Halt(real(6.0))


def test_factorial_needs_four_unfolds():
    assert run(FACT, [real(3.0)], 4) == Halt(real(6.0))
    out = run(FACT, [real(3.0)], 2)
    assert isinstance(out, Bottom) and out.reason == "FuelExhausted"


def test_zero_guard_takes_else_branch():
    assert eval(parse("if (0 > 0) 1 2")) == Halt(real(2.0))
    assert eval(parse("if (0 - 0 > 0) 1 2")) == Halt(real(2.0))


def test_cantor_examples():
    t = entry("cantor").term
    assert run(t, [real(0.5)], 64) == Halt(real(0.25))
    for fuel in (0, 1, 10, 100, 1000):
        out = run(t, [real(0.25)], fuel)
        assert isinstance(out, Bottom) and out.reason == "FuelExhausted"


def test_identity_closure():
    f = eval(parse("lam x : R. x")).value
    for v in (real(1.5), Reals((1.0, 2.0))):
        assert apply(f, v) == Halt(v)


def test_log_at_zero_is_domain_error():
    f = eval(parse("lam x : R. log x")).value
    out = apply(f, real(0.0))
    assert isinstance(out, Bottom) and out.reason == "DomainError"


def test_curried_pair():
    f = eval(parse("pair<R, R>")).value
    g = apply(f, real(1.0)).value
    assert apply(g, real(2.0)) == Halt(Pair(real(1.0), real(2.0)))


def test_default_fuel(monkeypatch):
    monkeypatch.delenv("PAPLANG_FUEL_DEFAULT", raising=False)
    assert default_fuel() == 1024
    monkeypatch.setenv("PAPLANG_FUEL_DEFAULT", "7")
    assert default_fuel() == 7


def test_deep_recursion_does_not_overflow():
    t = parse("mu f : R -> R. lam x : R. if (x > 0) (1 + f (x - 1)) 0")
    assert run(t, [real(5000.0)], 6000) == Halt(real(5000.0))


def _counting_table():
    calls = []

    def tick(v):
        calls.append(v.xs[0])
        return v

    table = default_table()
    table.register(ConstSpec("tick", Fun(R, R), 1, tick))
    return table, calls


def test_strictness_with_counting_constant():
    table, calls = _counting_table()
    t = parse("lam x : R. (lam y : R. tick 1) (tick (log x))", table)
    assert isinstance(run(t, [real(-1.0)], 10, table), Bottom)
    assert calls == []
    t = parse("lam x : R. tick 1 + tick (log x)", table)
    assert isinstance(run(t, [real(-1.0)], 10, table), Bottom)
    assert calls == [1.0]


def test_unused_branch_is_not_evaluated():
    table, calls = _counting_table()
    t = parse("lam x : R. if (x > 0) (tick 1) (tick 2)", table)
    assert run(t, [real(1.0)], 10, table) == Halt(real(1.0))
    assert calls == [1.0]


def _corpus_args(name, n, seed=0):
    e = entry(name)
    in_ty, _ = input_output_types(e.term)
    rng = np.random.default_rng(seed)
    return e, [unflatten(in_ty, x) for x in e.samples(rng, n)]


def test_determinism(corpus):
    for e in corpus:
        _, args = _corpus_args(e.name, 3)
        for a in args:
            assert run(e.term, [a], 64) == run(e.term, [a], 64)


@given(st.sampled_from(["factorial", "cantor", "iterate", "newton_sqrt", "halving", "pow_rec", "fib"]),
       st.integers(0, 40), st.integers(0, 64), st.integers(0, 2**32 - 1))
def test_fuel_monotonicity(name, n, extra, seed):
    e, args = _corpus_args(name, 1, seed)
    lo = run(e.term, args, n)
    hi = run(e.term, args, n + extra)
    if isinstance(lo, Halt):
        assert hi == lo


@given(st.floats(-50, 50, allow_nan=False))
def test_factorial_matches_gamma_on_integers(x):
    k = math.floor(abs(x)) % 15
    assert run(FACT, [real(float(k))], 20) == Halt(real(float(math.factorial(k))))
