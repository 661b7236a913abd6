import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from paplang.corpus import entry
from paplang.cov import (
    Chart,
    DensityQuery,
    LebesgueBox,
    constant_density,
    integrate_density,
    mc_verify,
    parse_measure,
    pushforward_density,
    uniform,
)
from paplang.errors import OffSupport, SingularJacobian
from paplang.syntax import parse

PWL = entry("piecewise_linear").term
MU = uniform(-1.0, 1.0)


def density(f, y, mu=MU, **kw):
    return pushforward_density(DensityQuery(mu, f, tuple(np.atleast_1d(y)), **kw))


def test_piecewise_linear_examples():
    assert density(PWL, 1.0) == 0.25
    assert abs(density(PWL, -1.5) - 1.0 / 6.0) <= 1e-12


def test_identity_returns_base_density():
    for y in (-0.9, 0.0, 0.4):
        assert density(entry("identity").term, y) == 0.5


def test_wrong_derivative_at_a_point_still_gives_the_density():
    t = entry("identity_branches").term
    for y in (-0.7, 0.3):
        assert density(t, y) == 0.5


def test_off_support():
    with pytest.raises(OffSupport):
        density(PWL, 2.5)
    with pytest.raises(OffSupport):
        density(PWL, -3.5)


def test_singular_jacobian():
    flat = parse("lam x : R. if (x > 0) x (0 * x)")
    with pytest.raises(SingularJacobian):
        density(flat, 0.0, mu=uniform(-1, 1), inverse=parse("lam y : R. 0 - 0.5"))


def test_supplied_inverse():
    inv = parse("lam y : R. if (y > 0) (y / 2) (y / 3)")
    assert density(PWL, 1.0, inverse=inv) == 0.25
    assert abs(density(PWL, -1.5, inverse=inv) - 1.0 / 6.0) <= 1e-12


def test_two_dimensional_box_with_inverse():
    mu = uniform([0.5, 0.0], [2.0, 1.0])
    f = entry("polar").term
    # no atan2 primitive, so the inverse is the constant preimage of this y
    r, th = 1.2, 0.4
    y = (r * math.cos(th), r * math.sin(th))
    inv = parse(f"lam y : R x R. ({r!r}, {th!r})")
    got = pushforward_density(DensityQuery(mu, f, y, inverse=inv))
    assert got == pytest.approx((1.0 / 1.5) / r, rel=1e-14)


def test_parse_measure():
    m = parse_measure("uniform:-1,1")
    assert m.lo == (-1.0,) and m.hi == (1.0,) and m.volume == 2.0
    assert parse_measure("uniform:0,1,0,2").dim == 2
    with pytest.raises(ValueError):
        parse_measure("gauss:0,1")


def test_non_uniform_base_density():
    mu = LebesgueBox((0.0,), (1.0,), parse("lam x : R. 2 * x"))
    assert density(entry("square").term, 0.25, mu=mu) == pytest.approx(2 * 0.5 / (2 * 0.5))


def test_chart_density():
    gamma = parse("lam t : R. (cos t, sin t)")
    mu = Chart(gamma, constant_density(1, 1.0 / 2.9), 0.1, 3.0)
    assert mu.check_injective()
    f = parse("lam p : R x R. (2 * fst p, 2 * snd p)")
    y = (2 * math.cos(1.0), 2 * math.sin(1.0))
    got = pushforward_density(DensityQuery(mu, f, y))
    assert got == pytest.approx((1.0 / 2.9) / 2.0, rel=1e-10)
    with pytest.raises(OffSupport):
        pushforward_density(DensityQuery(mu, f, (2.0, 2.0)))


def test_conservation():
    for name, lo, hi in (("piecewise_linear", -3.0, 2.0), ("identity", -1.0, 1.0), ("softplus", 0.0, 2.0)):
        total = integrate_density(MU, entry(name).term, lo, hi, n=400)
        assert abs(total - 1.0) <= 0.01, name


@given(st.floats(-2.99, 1.99).filter(lambda y: abs(y) > 1e-6))
def test_jacobian_source_equivalence(y):
    for f in (PWL, entry("softplus").term, entry("sine").term):
        q = DensityQuery(MU, f, (y,))
        try:
            a = pushforward_density(q)
        except OffSupport:
            continue
        b = pushforward_density(q, jacobian_source="fd")
        assert abs(a - b) <= 1e-6 * abs(a)


@given(st.floats(-2.99, 1.99))
def test_exactly_one_piece_contributes(y):
    q = DensityQuery(MU, PWL, (y,))
    try:
        pushforward_density(q)
    except OffSupport:
        return
    from paplang.cov import invert_1d

    roots = invert_1d(q.rep.rep, y, -1.0, 1.0)
    assert len(roots) == 1
    assert len(q.rep.rep.containing(roots)) == 1


def test_mc_verify_small():
    rep = mc_verify(MU, PWL, 20_000, 20, np.random.default_rng(2))
    assert rep.tv_distance < 0.05
    assert sum(rep.empirical) == pytest.approx(1.0)
    d = rep.as_dict()
    assert list(d) == ["tv_distance", "samples", "dropped", "singular", "off_support", "per_bin"]


def test_mc_verify_is_reproducible():
    a = mc_verify(MU, PWL, 5000, 10, np.random.default_rng(9)).as_dict()
    b = mc_verify(MU, PWL, 5000, 10, np.random.default_rng(9)).as_dict()
    assert a == b
