import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from paplang.corpus import entry
from paplang.errors import ElaborationError, NegativeScore
from paplang.pap import extract_rep, finite_diff, is_boundary
from paplang.ppl import density_gradient, density_term, elaborate, run_trace, trace_density
from paplang.syntax import parse
from paplang.typecheck import check_closed
from paplang.types import Fun
from paplang.values import Pair, Reals, real

GAUSS = parse("prob { x <- sample; score (exp (0 - x * x)); return x }")
_unit = st.floats(0.0, 1.0)


def test_sample_clause():
    out = run_trace(parse("prob { sample }"), [0.7])
    assert (out.value, out.weight, out.remainder) == (real(0.7), 1.0, ())


def test_score_clause():
    out = run_trace(parse("prob { score 0.5 }"), [0.3])
    assert (out.value, out.weight, out.remainder) == (real(0.0), 0.5, (0.3,))


def test_do_propagates_nothing_with_original_trace():
    out = run_trace(parse("prob { x <- sample; return x }"), [])
    assert (out.value, out.weight, out.remainder) == (None, 0.0, ())


def test_density_examples():
    assert trace_density(GAUSS, [0.3]) == math.exp(-0.09)
    assert trace_density(GAUSS, [0.3, 0.4]) == 0.0
    assert trace_density(parse("prob { return 1.0 }"), []) == 1.0


def test_short_trace_has_zero_density():
    assert trace_density(entry("two_samples").program, [0.5]) == 0.0


def test_gradient_examples():
    g = density_gradient(GAUSS, [0.3])
    assert g[0] == pytest.approx(-0.6 * math.exp(-0.09), abs=1e-15)
    fd = finite_diff(density_term(GAUSS, 1), [0.3])[0]
    assert abs(g[0] - fd[0]) <= 1e-4
    assert density_gradient(parse("prob { return 1.0 }"), []).shape == (0,)


def test_branching_score_boundary_is_flagged():
    p = entry("branching_score").program
    t = density_term(p, 1)
    assert is_boundary(t, (0.3,))
    assert trace_density(p, [0.3]) == 1.0
    assert density_gradient(p, [0.3])[0] == 0.0
    assert not is_boundary(t, (0.6,))


def test_negative_score_is_an_error():
    with pytest.raises(NegativeScore):
        trace_density(parse("prob { x <- sample; score (0 - x); return x }"), [0.5])
    assert trace_density(parse("prob { x <- sample; score (0 - x); return x }"), [-0.5]) == 0.5


def test_score_argument_must_be_real():
    with pytest.raises(ElaborationError):
        elaborate(parse("prob { score (1, 2) }"))


def test_elaborated_terms_are_well_typed():
    for p in (GAUSS, entry("two_samples").program, entry("branching_score").program):
        for k in range(4):
            assert isinstance(check_closed(elaborate(p, k))[1], Fun)


def test_pair_valued_result():
    out = run_trace(entry("two_samples").program, [0.25, 0.5])
    assert out.value == real(0.75) and out.weight == 1.0 and out.remainder == ()
    out = run_trace(parse("prob { x <- sample; return (x, x) }"), [0.25])
    assert out.value == Pair(real(0.25), real(0.25))


def _split(first_src, rest_src):
    whole = parse(f"prob {{ x <- {first_src}; {rest_src} }}")
    return whole, parse(f"prob {{ {first_src} }}")


@given(st.lists(_unit, min_size=0, max_size=4), st.floats(0.0, 2.0))
def test_weight_multiplicativity_and_trace_splitting(tr, w):
    whole = parse(f"prob {{ x <- sample; y <- score ({w!r} * x); z <- sample; return (x + z) }}")
    first = parse("prob { sample }")
    a = run_trace(first, tr)
    out = run_trace(whole, tr)
    if a.value is None:
        assert (out.value, out.weight, out.remainder) == (None, 0.0, tuple(tr))
        return
    x = a.value.xs[0]
    rest = parse(f"prob {{ y <- score ({w!r} * {x!r}); z <- sample; return ({x!r} + z) }}")
    b = run_trace(rest, a.remainder)
    if b.value is None:
        assert out.value is None and out.weight == 0.0
        return
    assert out.weight == a.weight * b.weight
    assert out.remainder == b.remainder
    assert out.value == b.value


@given(st.lists(_unit, min_size=0, max_size=4))
def test_score_free_density_is_length_indicator(tr):
    assert trace_density(entry("two_samples").program, tr) == (1.0 if len(tr) == 2 else 0.0)


def test_normalisation_monte_carlo():
    rng = np.random.default_rng(5)
    vals = np.array([trace_density(entry("two_samples").program, t) for t in rng.uniform(size=(2000, 2))])
    assert vals.mean() == 1.0


def test_density_is_piecewise_analytic():
    for name in ("gaussian", "branching_score", "two_samples"):
        e = entry(name)
        r = extract_rep(density_term(e.program, e.trace_length), 4)
        assert len(r) >= 1
