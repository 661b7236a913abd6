"""Pushforward densities through piecewise-analytic bijections.

For y = f(x) with x in piece A_i the density of f∗μ at y is
ρ(x) / |det J_i(x)|, where J_i is the Jacobian of the analytic piece f_i.
Because only one piece contains x, no summation is needed, and the value
is right even where J_i differs from the derivative of f itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import Diverged, OffDomain, OffSupport, SingularJacobian
from .pap import (
    IntensionalDeriv,
    Piece,
    PiecewiseRep,
    compose,
    contains,
    eval_point,
    eval_points,
    extract_rep,
    intensional_derivative,
    intensional_jacobian,
    local_piece,
    piece_jacobian,
    pw_eval,
    steps,
)
from .syntax import Lam, Term, lit
from .types import R, RealVec
from .values import Bottom

BISECT_TOL = 1e-12
SINGULAR = 1e-300
GRID = 4097


def constant_density(n: int, c: float) -> Term:
    return Lam("x", R if n == 1 else RealVec(n), lit(float(c)))


@dataclass(frozen=True)
class LebesgueBox:
    """A measure on the box [lo, hi] with density ``density : R^n -> R``."""

    lo: tuple
    hi: tuple
    density: Term

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.hi, self.lo)))

    def inside(self, x) -> bool:
        return all(a <= v <= b for a, v, b in zip(self.lo, x, self.hi))

    def rho(self, x) -> float:
        if not self.inside(x):
            return 0.0
        out = eval_point(self.density, x)
        if isinstance(out, Bottom):
            raise Diverged(out, tuple(x))
        return out[0]


def uniform(lo: Sequence[float], hi: Sequence[float]) -> LebesgueBox:
    lo = tuple(float(v) for v in np.atleast_1d(lo))
    hi = tuple(float(v) for v in np.atleast_1d(hi))
    vol = float(np.prod(np.subtract(hi, lo)))
    if vol <= 0:
        raise ValueError("empty box")
    return LebesgueBox(lo, hi, constant_density(len(lo), 1.0 / vol))


def parse_measure(spec: str) -> LebesgueBox:
    """``uniform:lo,hi`` or ``uniform:lo1,hi1,lo2,hi2,...``."""
    kind, _, args = spec.partition(":")
    if kind != "uniform":
        raise ValueError(f"unknown base measure {kind!r}")
    xs = [float(a) for a in args.split(",")]
    if len(xs) % 2 or not xs:
        raise ValueError("uniform needs lo,hi pairs")
    return uniform(xs[0::2], xs[1::2])


@dataclass(frozen=True)
class Chart:
    """A measure on the curve gamma([lo, hi]) in R^n, with parameter density ``param_density``."""

    gamma: Term
    param_density: Term
    lo: float
    hi: float

    def check_injective(self, samples: int = 257) -> bool:
        ts = np.linspace(self.lo, self.hi, samples)
        pts = []
        for t in ts:
            out = eval_point(self.gamma, [t])
            if isinstance(out, Bottom):
                raise Diverged(out, (t,))
            pts.append(out)
        pts = np.array(pts)
        d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
        np.fill_diagonal(d, np.inf)
        return bool(d.min() > 0.0)


@dataclass
class DensityQuery:
    """Density of f∗mu at y.  ``inverse`` maps y back to x (or to the chart parameter)."""

    mu: LebesgueBox | Chart
    f: Term
    y: tuple
    inverse: Term | None = None
    rep: IntensionalDeriv | None = None
    budget: int = 8
    fuel: int | None = None
    intervals: dict = field(default_factory=dict, repr=False)


def _solve(t: Term, y, fuel) -> tuple:
    out = eval_point(t, y, fuel)
    if isinstance(out, Bottom):
        raise OffSupport(f"inverse is undefined at {tuple(y)}: {out}")
    return out


def _bisect(pred, a: float, b: float) -> tuple[float, float]:
    """Shrink [a, b] with pred(a) true and pred(b) false until it is tiny."""
    for _ in range(2000):
        if abs(b - a) <= BISECT_TOL * max(1.0, abs(a)):
            break
        m = 0.5 * (a + b)
        if m == a or m == b:
            break
        if pred(m):
            a = m
        else:
            b = m
    return a, b


def _member(p: Piece, t: float) -> bool:
    return contains(p.set, (t,)) is True


def piece_intervals(p: Piece, lo: float, hi: float) -> list[tuple[float, float]]:
    """Maximal subintervals of [lo, hi] (found on a grid, ends refined) inside the piece."""
    grid = np.linspace(lo, hi, GRID)
    inside = [_member(p, float(t)) for t in grid]
    out = []
    k = 0
    while k < len(grid):
        if not inside[k]:
            k += 1
            continue
        j = k
        while j + 1 < len(grid) and inside[j + 1]:
            j += 1
        a, b = float(grid[k]), float(grid[j])
        if k > 0:
            a = _bisect(lambda t: _member(p, t), a, float(grid[k - 1]))[0]
        if j + 1 < len(grid):
            b = _bisect(lambda t: _member(p, t), b, float(grid[j + 1]))[0]
        out.append((a, b))
        k = j + 1
    return out


def invert_1d(rep: PiecewiseRep, y: float, lo: float, hi: float, coord: int = 0,
              cache: dict | None = None) -> list[float]:
    """All x in [lo, hi] with f(x)[coord] = y, by bisection on each piece."""
    cache = {} if cache is None else cache
    roots = []
    for i, p in enumerate(rep.pieces):
        def phi(t, p=p):
            return p.fn((t,))[coord] - y

        if i not in cache:
            cache[i] = piece_intervals(p, lo, hi)
        for a, b in cache[i]:
            try:
                fa, fb = phi(a), phi(b)
            except OffDomain:
                continue
            if fa == 0.0:
                roots.append(a)
                continue
            if fb == 0.0:
                roots.append(b)
                continue
            if (fa > 0) == (fb > 0):
                continue
            sa = fa > 0
            u, v = _bisect(lambda t: (phi(t) > 0) == sa, a, b)
            x = 0.5 * (u + v)
            roots.append(x if _member(p, x) else u)
    return roots


def _rep(q: DensityQuery, f: Term) -> IntensionalDeriv:
    if q.rep is None:
        q.rep = intensional_derivative(extract_rep(f, q.budget, partial=True))
    return q.rep


def _jacobian(q: DensityQuery, f: Term, x: tuple, source: str) -> np.ndarray:
    if q.rep is not None:
        try:
            piece = q.rep.rep.pieces[q.rep.rep.containing(x)[0]]
        except IndexError:
            raise OffSupport(f"no piece contains {x}") from None
        if source == "intensional":
            return intensional_jacobian(q.rep, x)
    else:
        try:
            piece = local_piece(f, x, q.fuel)
        except Diverged as e:
            raise OffSupport(f"f bottoms at {x}") from e
        if source == "intensional":
            return piece_jacobian(piece, x)
    return piece_fd_jacobian(piece, x)


def piece_fd_jacobian(p: Piece, x, h: float = 1e-6) -> np.ndarray:
    """Central differences of the analytic piece function itself."""
    x = np.asarray(x, dtype=float)
    hs = steps(x, h)
    cols = []
    for j in range(len(x)):
        xp, xm = x.copy(), x.copy()
        xp[j] += hs[j]
        xm[j] -= hs[j]
        cols.append((np.array(p.fn(tuple(xp))) - np.array(p.fn(tuple(xm)))) / (2 * hs[j]))
    return np.stack(cols, axis=1)


def pushforward_density(q: DensityQuery, jacobian_source: str = "intensional") -> float:
    """ρ(x) / |det J_i(x)| at the preimage x of q.y, J_i from the active piece.

    ``jacobian_source="fd"`` swaps the symbolic Jacobian for finite
    differences of the same piece.
    """
    y = tuple(float(v) for v in np.atleast_1d(q.y))
    if isinstance(q.mu, Chart):
        return _chart_density(q, y, jacobian_source)
    mu = q.mu
    if q.inverse is not None:
        x = _solve(q.inverse, y, q.fuel)
    elif mu.dim == 1 and len(y) == 1:
        roots = invert_1d(_rep(q, q.f).rep, y[0], mu.lo[0], mu.hi[0], cache=q.intervals)
        if not roots:
            raise OffSupport(f"{y[0]} is not in the image of the support")
        x = (roots[0],)
    else:
        raise ValueError("multivariate queries need an inverse term")
    if not mu.inside(x):
        raise OffSupport(f"preimage {x} lies outside the support")
    jac = _jacobian(q, q.f, x, jacobian_source)
    if jac.shape[0] != jac.shape[1]:
        raise ValueError(f"f must map R^n to R^n, Jacobian has shape {jac.shape}")
    det = abs(float(np.linalg.det(jac))) if jac.shape[0] > 1 else abs(float(jac[0, 0]))
    if det < SINGULAR:
        raise SingularJacobian(f"|det J| = {det} at {x}")
    return mu.rho(x) / det


def _chart_density(q: DensityQuery, y: tuple, source: str) -> float:
    mu = q.mu
    if q.rep is None:
        q.rep = intensional_derivative(compose(
            extract_rep(mu.gamma, q.budget, partial=True),
            extract_rep(q.f, q.budget, partial=True),
        ))
    if q.inverse is not None:
        (t,) = _solve(q.inverse, y, q.fuel)
    else:
        roots = [r for r in invert_1d(q.rep.rep, y[0], mu.lo, mu.hi, cache=q.intervals)
                 if _close(pw_eval(q.rep.rep, (r,)), y)]
        if not roots:
            raise OffSupport(f"{y} is not on the image curve")
        t = roots[0]
    if not mu.lo <= t <= mu.hi:
        raise OffSupport(f"parameter {t} lies outside [{mu.lo}, {mu.hi}]")
    jac = _jacobian(q, q.f, (t,), source)
    speed = float(np.linalg.norm(jac[:, 0]))
    if speed < SINGULAR:
        raise SingularJacobian(f"zero velocity at parameter {t}")
    out = eval_point(mu.param_density, [t])
    if isinstance(out, Bottom):
        raise Diverged(out, (t,))
    return out[0] / speed


def _close(a, b) -> bool:
    return all(math.isclose(u, v, rel_tol=1e-9, abs_tol=1e-9) for u, v in zip(a, b))


@dataclass
class CovReport:
    tv_distance: float
    edges: list
    empirical: list
    predicted: list
    samples: int
    dropped: int = 0
    singular: int = 0
    off_support: int = 0
    per_bin: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "tv_distance": self.tv_distance,
            "samples": self.samples,
            "dropped": self.dropped,
            "singular": self.singular,
            "off_support": self.off_support,
            "per_bin": self.per_bin,
        }


def mc_verify(mu: LebesgueBox, f: Term, samples: int = 100_000, bins: int = 50,
              rng: np.random.Generator | None = None, inverse: Term | None = None,
              budget: int = 8, fuel: int | None = None) -> CovReport:
    """Histogram f(X), X ~ mu, against bin masses predicted by ``pushforward_density``.

    Samples are drawn uniformly on the box and weighted by ρ·volume, so any
    box density works.  Only one-dimensional boxes are supported.
    """
    if not isinstance(mu, LebesgueBox) or mu.dim != 1:
        raise ValueError("mc_verify handles one-dimensional boxes")
    rng = np.random.default_rng(0) if rng is None else rng
    xs = rng.uniform(mu.lo[0], mu.hi[0], samples)
    outs = eval_points(f, [[float(x)] for x in xs], fuel)
    dens = eval_points(mu.density, [[float(x)] for x in xs], fuel)
    ys, ws = [], []
    dropped = 0
    for out, d in zip(outs, dens):
        if isinstance(out, Bottom) or isinstance(d, Bottom):
            dropped += 1
            continue
        ys.append(out[0])
        ws.append(d[0] * mu.volume / samples)
    ys = np.array(ys)
    lo, hi = float(ys.min()), float(ys.max())
    pad = 0.025 * (hi - lo) if hi > lo else 0.5
    edges = np.linspace(lo - pad, hi + pad, bins + 1)
    empirical, _ = np.histogram(ys, bins=edges, weights=np.array(ws))
    q = DensityQuery(mu, f, (0.0,), inverse=inverse, budget=budget, fuel=fuel)
    predicted = []
    singular = off = 0
    for a, b in zip(edges[:-1], edges[1:]):
        q.y = (0.5 * (a + b),)
        try:
            d = pushforward_density(q)
        except SingularJacobian:
            singular += 1
            d = 0.0
        except OffSupport:
            off += 1
            d = 0.0
        predicted.append(d * (b - a))
    predicted = np.array(predicted)
    tv = 0.5 * float(np.abs(empirical - predicted).sum())
    per_bin = [
        {"lo": float(a), "hi": float(b), "empirical": float(e), "predicted": float(p)}
        for a, b, e, p in zip(edges[:-1], edges[1:], empirical, predicted)
    ]
    return CovReport(tv, edges.tolist(), empirical.tolist(), predicted.tolist(), samples,
                     dropped, singular, off, per_bin)


def integrate_density(mu: LebesgueBox, f: Term, lo: float, hi: float, n: int = 2000,
                      budget: int = 8) -> float:
    """Midpoint-rule integral of the 1-D pushforward density over [lo, hi]."""
    q = DensityQuery(mu, f, (0.0,), budget=budget)
    width = (hi - lo) / n
    total = 0.0
    for k in range(n):
        q.y = (lo + (k + 0.5) * width,)
        try:
            total += pushforward_density(q) * width
        except (OffSupport, SingularJacobian):
            pass
    return total
