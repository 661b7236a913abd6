import math

import numpy as np
from hypothesis import given, strategies as st

from paplang.ad import ad_transform, derivative, input_output_types, jacobian
from paplang.corpus import entry, load
from paplang.evaluator import eval, run
from paplang.pap import extract_rep, finite_diff, intensional_derivative, intensional_jacobian
from paplang.syntax import app, lit, pair, parse
from paplang.types import Fun, Prod, R, dual_type
from paplang.values import Bottom, Halt, Pair, flatten, real, unflatten

from conftest import FACTORIAL

FACT = parse(FACTORIAL)
NAMES = [e.name for e in load()]


def test_dual_types():
    assert dual_type(R) == Prod(R, R)
    assert dual_type(Fun(R, R)) == Fun(Prod(R, R), Prod(R, R))
    assert dual_type(Prod(R, Fun(R, R))) == Prod(Prod(R, R), Fun(Prod(R, R), Prod(R, R)))


def test_log_translation():
    f = ad_transform(parse("log"))
    out = eval(app(f, pair(lit(2.0), lit(3.0))))
    assert out == Halt(Pair(real(math.log(2.0)), real(1.5)))


def test_constant_translation():
    assert eval(ad_transform(parse("3"))) == Halt(Pair(real(3.0), real(0.0)))


def test_transform_is_typed_over_duals():
    from paplang.typecheck import check_closed

    assert check_closed(ad_transform(check_closed(FACT)[0]))[1] == Fun(Prod(R, R), Prod(R, R))


def test_factorial_tangent_matches_oracle():
    res = derivative(FACT, (3.0,), (1.0,), 10)
    rep = extract_rep(FACT, 5, partial=True)
    oracle = intensional_jacobian(intensional_derivative(rep), (3.0,))[0, 0]
    assert res.primal == (6.0,)
    assert res.tangent[0] == oracle
    assert res.tangent == (11.0,)


def test_factorial_at_minus_one_halts_with_one():
    for fuel in (1, 2, 10, 1000):
        assert run(FACT, [real(-1.0)], fuel) == Halt(real(1.0))
        assert derivative(FACT, (-1.0,), (1.0,), fuel).primal == (1.0,)
    p = run(FACT, [real(-1.0)], 0)
    q = derivative(FACT, (-1.0,), (1.0,), 0)
    assert isinstance(p, Bottom) and isinstance(q, Bottom) and p.reason == q.reason == "FuelExhausted"


def test_divergent_program_bottoms_in_both_runs():
    t = entry("loop_negative").term
    for fuel in (1, 16, 1024):
        p = run(t, [real(-1.0)], fuel)
        q = derivative(t, (-1.0,), (1.0,), fuel)
        assert isinstance(p, Bottom) and isinstance(q, Bottom)
        assert p.reason == q.reason == "FuelExhausted"


def test_sin_at_zero():
    res = derivative(parse("lam x : R. sin x"), (0.0,), (1.0,))
    assert (res.primal, res.tangent) == ((0.0,), (1.0,))


def test_identity_via_branches_fails_at_zero():
    t = entry("identity_branches").term
    res = derivative(t, (0.0,), (1.0,))
    assert (res.primal, res.tangent) == ((0.0,), (0.0,))
    assert abs(finite_diff(t, (0.0,))[0, 0] - 1.0) <= 1e-6
    for x in (-0.5, 0.5):
        assert derivative(t, (x,), (1.0,)).tangent == (1.0,)


def test_domain_error_parity():
    t = parse("lam x : R. log x")
    p = run(t, [real(-1.0)], 10)
    q = derivative(t, (-1.0,), (1.0,), 10)
    assert isinstance(p, Bottom) and isinstance(q, Bottom) and p.reason == q.reason == "DomainError"


def test_jacobian_of_polar():
    primal, jac = jacobian(entry("polar").term, (2.0, 0.5))
    assert primal == (2.0 * math.cos(0.5), 2.0 * math.sin(0.5))
    np.testing.assert_allclose(jac, [[math.cos(0.5), -2.0 * math.sin(0.5)],
                                     [math.sin(0.5), 2.0 * math.cos(0.5)]], rtol=1e-15)


def _point(e, seed):
    rng = np.random.default_rng(seed)
    x = tuple(float(v) for v in e.sample(rng))
    d = tuple(float(v) for v in rng.normal(size=len(x)))
    return x, d


@given(st.sampled_from(NAMES), st.integers(0, 2**32 - 1), st.sampled_from([0, 1, 2, 3, 5, 8, 64, 1024]))
def test_halting_parity_and_primal_preservation(name, seed, fuel):
    e = entry(name)
    x, d = _point(e, seed)
    in_ty, _ = input_output_types(e.term)
    p = run(e.term, [unflatten(in_ty, x)], fuel)
    q = derivative(e.term, x, d, fuel)
    assert isinstance(p, Bottom) == isinstance(q, Bottom)
    if isinstance(p, Bottom):
        assert p.reason == q.reason
    else:
        assert flatten(p.value) == q.primal


@given(st.sampled_from(NAMES), st.integers(0, 2**32 - 1), st.sampled_from([2.0, -3.0, 0.5, 0.0]))
def test_tangent_linearity(name, seed, a):
    e = entry(name)
    x, d = _point(e, seed)
    base = derivative(e.term, x, d)
    scaled = derivative(e.term, x, tuple(a * v for v in d))
    if isinstance(base, Bottom):
        assert isinstance(scaled, Bottom)
        return
    # up to rounding in the accumulated products
    np.testing.assert_allclose(scaled.tangent, [a * v for v in base.tangent], rtol=1e-12, atol=1e-12 * max(1.0, *map(abs, base.tangent)))


@given(st.sampled_from([e.name for e in load() if "total" in e.tags]), st.integers(0, 2**32 - 1))
def test_tangent_agrees_with_finite_differences(name, seed):
    from paplang.pap import check_point

    e = entry(name)
    x, _ = _point(e, seed)
    r = check_point(e.term, x)
    assert r.failed == 0 and r.undefined == 0
    assert r.passed + r.boundary == 1
