import json
from fractions import Fraction

import pytest

from paplang.ad import derivative
from paplang.corpus import TAGS, corpus_dir, entry, load, parse_arg, resolve
from paplang.evaluator import run
from paplang.pap import finite_diff
from paplang.values import format_outcome


def test_corpus_size_and_tags(corpus):
    assert len(corpus) >= 25
    assert len({e.name for e in corpus}) == len(corpus)
    for e in corpus:
        assert e.tags and e.tags <= TAGS
        assert e.path.exists()
    present = set().union(*(e.tags for e in corpus))
    assert present == TAGS


def test_types_match_manifest(corpus):
    for e in corpus:
        assert e.check_type() == ("prob" if e.probabilistic else e.type), e.name


@pytest.mark.parametrize("e", [e for e in load() if e.expect], ids=lambda e: e.name)
def test_expected_outcomes(e):
    for x in e.expect:
        out = run(e.term, [parse_arg(a) for a in x.args], x.fuel)
        assert format_outcome(out) == x.outcome


@pytest.mark.parametrize("e", [e for e in load() if "ad-failure" in e.tags], ids=lambda e: e.name)
def test_ad_failure_entries(e):
    info = e.ad_failure
    x = tuple(info["point"])
    assert derivative(e.term, x, (1.0,)).tangent == (info["ad_tangent"],)
    assert abs(finite_diff(e.term, x)[0, 0] - info["true_derivative"]) <= 1e-6


def test_ad_failure_requires_a_point(tmp_path):
    root = tmp_path / "c"
    root.mkdir()
    (root / "p.pap").write_text("lam x : R. x")
    (root / "manifest.json").write_text(json.dumps({"programs": [
        {"name": "p", "file": "p.pap", "type": "R -> R", "tags": ["ad-failure"], "sampler": [[0, 1]]}]}))
    with pytest.raises(ValueError):
        load(root)


def test_samplers_match_input_dimension(corpus):
    from paplang.pap import program_dims

    for e in corpus:
        assert program_dims(e.term)[0] == e.dim, e.name


def test_resolve_falls_back_to_bundled_corpus():
    assert resolve("examples/factorial.pap") == corpus_dir() / "factorial.pap"
    assert resolve("factorial") == corpus_dir() / "factorial.pap"
    with pytest.raises(FileNotFoundError):
        resolve("no/such/program.pap")


def _exact_ternary_hits_middle_third(x: Fraction, steps: int) -> int | None:
    """First step at which the exact tripling orbit of x lies in an open middle third."""
    y = x
    for k in range(steps):
        if Fraction(1, 3) < y < Fraction(2, 3):
            return k
        y = 3 * y if y < Fraction(1, 3) else 3 * y - 2
    return None


def test_float_one_thirteenth_is_not_in_the_cantor_set():
    """1/13 is a Cantor point, but the double nearest to it is not."""
    assert _exact_ternary_hits_middle_third(Fraction(1, 13), 10_000) is None
    assert _exact_ternary_hits_middle_third(Fraction(1.0 / 13.0), 200) == 38


def test_cantor_program_halts_at_float_one_thirteenth():
    out = run(entry("cantor").term, [parse_arg(repr(1.0 / 13.0))], 40)
    assert out.halted
