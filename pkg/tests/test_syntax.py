import pytest
from hypothesis import given, strategies as st

from paplang.errors import ParseError, ScopeError
from paplang.syntax import (
    App, Const, IfGtZero, Lam, Mu, Var, alpha_eq, iter_nodes, parse, parse_type, pretty, pretty_program,
)
from paplang.types import Fun, Prod, R, RealVec

from conftest import FACTORIAL


def test_factorial_parses_to_expected_shape():
    t = parse(FACTORIAL)
    assert isinstance(t, Mu) and t.fname == "f" and t.fty == Fun(R, R)
    lam = t.body
    assert isinstance(lam, Lam) and lam.param == "x" and lam.param_ty == R
    assert isinstance(lam.body, IfGtZero)


def test_identity():
    assert parse("lam x : R. x") == Lam("x", R, Var("x"))


def test_unbound_variable():
    with pytest.raises(ScopeError) as exc:
        parse("lam x : R. y")
    assert exc.value.name == "y"
    assert (exc.value.line, exc.value.col) == (1, 12)


def test_parse_error_reports_position_and_expected_tokens():
    with pytest.raises(ParseError) as exc:
        parse("lam x : R.\n  (x +")
    assert exc.value.line == 2
    assert exc.value.expected


def test_mu_requires_function_type():
    with pytest.raises(ParseError):
        parse("mu f : R. f")


def test_pair_sugar_is_desugared():
    t = parse("lam x : R. (x, x)")
    assert isinstance(t.body, App) and isinstance(t.body.fn, App)
    assert t.body.fn.fn == Const("pair", t.body.fn.fn.ty)


def test_types():
    assert parse_type("R^3") == RealVec(3)
    assert parse_type("R x R -> R") == Fun(Prod(R, R), R)
    assert parse_type("(R -> R) -> R") == Fun(Fun(R, R), R)


def test_var_prints_as_name():
    assert pretty(Var("zeta")) == "zeta"


def test_nested_application_is_minimally_parenthesised():
    t = parse("lam f : R -> R -> R. lam g : R -> R. lam x : R. f (g x) (g (g x))")
    text = pretty(t)
    assert "f (g x) (g (g x))" in text
    assert alpha_eq(parse(text), t)


def test_corpus_round_trip(corpus):
    for e in corpus:
        p = e.program
        again = parse(pretty_program(p))
        if e.probabilistic:
            assert pretty_program(again) == pretty_program(p), e.name
        else:
            assert alpha_eq(again, p), e.name


def test_no_surface_pairs_survive(corpus):
    for e in corpus:
        if e.probabilistic:
            continue
        for node in iter_nodes(e.program):
            assert type(node).__name__ in {"Var", "Const", "App", "IfGtZero", "Lam", "Mu"}


def test_alpha_equivalence_ignores_binder_names():
    assert alpha_eq(parse("lam x : R. x"), parse("lam y : R. y"))
    assert not alpha_eq(parse("lam x : R. lam y : R. x"), parse("lam x : R. lam y : R. y"))


# random closed terms over one real variable: round trip through the printer
_lit = st.floats(-1e6, 1e6, allow_nan=False).map(lambda v: f"({v!r})")


def _terms(names):
    leaf = st.sampled_from(sorted(names)) | _lit
    return st.recursive(
        leaf,
        lambda inner: st.one_of(
            st.tuples(inner, st.sampled_from("+-*/"), inner).map(lambda t: f"({t[0]} {t[1]} {t[2]})"),
            st.tuples(inner, inner, inner).map(lambda t: f"(if ({t[0]} > 0) {t[1]} {t[2]})"),
            inner.map(lambda a: f"(sin {a})"),
            inner.map(lambda a: f"((lam z : R. z * {a}) {a})"),
        ),
        max_leaves=12,
    )


@given(_terms({"x", "y"}))
def test_round_trip_property(body):
    t = parse(f"lam x : R. lam y : R. {body}")
    assert alpha_eq(parse(pretty(t)), t)


@given(_terms({"x"}))
def test_pretty_is_stable(body):
    t = parse(f"lam x : R. {body}")
    assert pretty(parse(pretty(t))) == pretty(t)
