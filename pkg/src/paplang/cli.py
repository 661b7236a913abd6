"""Command-line interface.

Exit codes: 0 success, 1 static error (parse, scope, type, elaboration),
2 runtime bottom or oracle error, 3 acceptance failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import acceptance
from .ad import ad_transform, derivative, jacobian
from .corpus import load, parse_arg, resolve
from .cov import DensityQuery, mc_verify, parse_measure, pushforward_density
from .errors import NotFirstOrder, PapError, StaticError
from .evaluator import default_fuel, run
from .pap import ae_check, extract_rep, show_rep, uniform_sampler
from .ppl import density_gradient, prob_type, trace_density
from .syntax import ProbTerm, Term, parse, pretty
from .typecheck import check_closed
from .types import show_type
from .values import Bottom, flatten, format_outcome

EXIT_OK, EXIT_STATIC, EXIT_BOTTOM, EXIT_ACCEPTANCE = 0, 1, 2, 3


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _load(path: str):
    return parse(resolve(path).read_text())


def _term(path: str) -> Term:
    p = _load(path)
    if isinstance(p, ProbTerm):
        raise StaticError(f"{path} is a probabilistic program; use the density subcommand")
    return p


def _emit(args, data: dict, text: str) -> None:
    if args.json:
        print(json.dumps(data, sort_keys=True))
    else:
        print(text)


def cmd_check(args) -> int:
    p = _load(args.file)
    if isinstance(p, ProbTerm):
        ty = f"M {show_type(prob_type({}, p))}"
    else:
        ty = show_type(check_closed(p)[1])
    _emit(args, {"type": ty}, ty)
    return EXIT_OK


def cmd_run(args) -> int:
    t = _term(args.file)
    check_closed(t)
    out = run(t, [parse_arg(a) for a in args.arg], args.fuel)
    data = {"outcome": format_outcome(out), "halted": out.halted}
    if out.halted:
        try:
            data["value"] = list(flatten(out.value))
        except TypeError:
            data["value"] = None
    _emit(args, data, format_outcome(out))
    return EXIT_OK if out.halted else EXIT_BOTTOM


def cmd_diff(args) -> int:
    t = _term(args.file)
    if args.emit:
        text = pretty(ad_transform(check_closed(t)[0]))
        _emit(args, {"term": text}, text)
        if args.at is None:
            return EXIT_OK
    if args.at is None:
        raise SystemExit("diff needs --at (or --emit)")
    x = _floats(args.at)
    if args.dir is not None:
        res = derivative(t, x, _floats(args.dir), args.fuel)
        if isinstance(res, Bottom):
            _emit(args, {"outcome": format_outcome(res)}, format_outcome(res))
            return EXIT_BOTTOM
        _emit(args, {"primal": list(res.primal), "tangent": list(res.tangent)},
              f"primal {list(res.primal)}\ntangent {list(res.tangent)}")
        return EXIT_OK
    res = jacobian(t, x, args.fuel)
    if isinstance(res, Bottom):
        _emit(args, {"outcome": format_outcome(res)}, format_outcome(res))
        return EXIT_BOTTOM
    primal, jac = res
    _emit(args, {"primal": list(primal), "jacobian": jac}, f"primal {list(primal)}\njacobian {jac}")
    return EXIT_OK


def _sampler_for(args, t: Term):
    path = resolve(args.file)
    for e in load():
        if e.path.resolve() == path.resolve():
            return e.sample
    from .pap import program_dims

    n, _ = program_dims(t)
    lo, hi = _floats(args.range)
    return uniform_sampler(lo, hi, n)


def cmd_oracle(args) -> int:
    t = _term(args.file)
    if args.rep:
        rep = extract_rep(t, args.budget, partial=True)
        data = {
            "pieces": [p.show() for p in rep.pieces],
            "unresolved": [u.show() for u in rep.unresolved],
        }
        _emit(args, data, show_rep(rep))
        return EXIT_OK
    rng = np.random.default_rng(args.seed)
    report = ae_check(t, _sampler_for(args, t), args.points, args.tol, rng=rng, fuel=args.fuel)
    print(json.dumps(report.as_dict(), sort_keys=True))
    return EXIT_OK


def cmd_density(args) -> int:
    p = _load(args.file)
    if not isinstance(p, ProbTerm):
        raise StaticError(f"{args.file} is not a probabilistic program")
    tr = _floats(args.trace) if args.trace else []
    d = trace_density(p, tr, args.fuel)
    if isinstance(d, Bottom):
        _emit(args, {"outcome": format_outcome(d)}, format_outcome(d))
        return EXIT_BOTTOM
    data = {"density": d}
    text = f"density {d!r}"
    if args.grad:
        g = density_gradient(p, tr, args.fuel)
        if isinstance(g, Bottom):
            _emit(args, {"outcome": format_outcome(g)}, format_outcome(g))
            return EXIT_BOTTOM
        data["gradient"] = g.tolist()
        text += f"\ngradient {g.tolist()}"
    _emit(args, data, text)
    return EXIT_OK


def cmd_cov(args) -> int:
    f = _term(args.file)
    inv = _term(args.inverse) if args.inverse else None
    q = DensityQuery(parse_measure(args.mu), f, tuple(_floats(args.at)), inverse=inv,
                     budget=args.budget, fuel=args.fuel)
    d = pushforward_density(q)
    _emit(args, {"density": d}, f"density {d!r}")
    return EXIT_OK


def cmd_cov_verify(args) -> int:
    f = _term(args.file)
    inv = _term(args.inverse) if args.inverse else None
    rng = np.random.default_rng(args.seed)
    rep = mc_verify(parse_measure(args.mu), f, args.samples, args.bins, rng, inverse=inv,
                    budget=args.budget, fuel=args.fuel)
    print(json.dumps(rep.as_dict(), sort_keys=True))
    return EXIT_OK


def cmd_corpus(args) -> int:
    only = set(int(v) for v in args.only.split(",")) if args.only else None
    results = []
    for c in acceptance.CRITERIA:
        n = int(c.__name__.rsplit("_", 1)[1])
        if only and n not in only:
            continue
        r = c(args.seed)
        results.append(r)
        if not args.json:
            print(r.line(), flush=True)
    if args.json:
        print(json.dumps([{"criterion": r.number, "title": r.title, "ok": r.ok, "summary": r.summary}
                          for r in results], sort_keys=True))
    else:
        passed = sum(r.ok for r in results)
        print(f"{passed}/{len(results)} criteria passed")
    return EXIT_OK if all(r.ok for r in results) else EXIT_ACCEPTANCE


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="paplang", description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=42, help="seed for every random choice")
    ap.add_argument("--json", action="store_true", help="machine-readable output")
    sub = ap.add_subparsers(dest="cmd", required=True)
    fuel = default_fuel()

    p = sub.add_parser("check", help="typecheck a program")
    p.add_argument("file")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("run", help="evaluate a program on arguments")
    p.add_argument("file")
    p.add_argument("--arg", action="append", default=[], help="argument as a term literal, repeatable")
    p.add_argument("--fuel", type=int, default=fuel)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("diff", help="forward-mode derivative")
    p.add_argument("file")
    p.add_argument("--at", help="comma-separated input coordinates")
    p.add_argument("--dir", help="comma-separated direction (default: full Jacobian)")
    p.add_argument("--emit", action="store_true", help="print the transformed term")
    p.add_argument("--fuel", type=int, default=fuel)
    p.set_defaults(fn=cmd_diff)

    p = sub.add_parser("oracle", help="a.e. check of AD against finite differences")
    p.add_argument("file")
    p.add_argument("--points", type=int, default=1000)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--rep", action="store_true", help="print the piecewise representation")
    p.add_argument("--budget", type=int, default=8, help="unroll budget for --rep")
    p.add_argument("--range", default="-1,1", help="sampling range for programs outside the corpus")
    p.add_argument("--fuel", type=int, default=fuel)
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("density", help="trace density of a probabilistic program")
    p.add_argument("file")
    p.add_argument("--trace", default="")
    p.add_argument("--grad", action="store_true")
    p.add_argument("--fuel", type=int, default=fuel)
    p.set_defaults(fn=cmd_density)

    for name, fn in (("cov", cmd_cov), ("cov-verify", cmd_cov_verify)):
        p = sub.add_parser(name, help="pushforward density" if name == "cov" else "Monte Carlo check of densities")
        p.add_argument("file")
        p.add_argument("--mu", default="uniform:-1,1")
        p.add_argument("--inverse")
        p.add_argument("--budget", type=int, default=8)
        p.add_argument("--fuel", type=int, default=fuel)
        if name == "cov":
            p.add_argument("--at", required=True)
        else:
            p.add_argument("--samples", type=int, default=100_000)
            p.add_argument("--bins", type=int, default=50)
        p.set_defaults(fn=fn)

    p = sub.add_parser("corpus", help="run the acceptance suite")
    p.add_argument("--only", help="comma-separated criterion numbers")
    p.set_defaults(fn=cmd_corpus)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (StaticError, NotFirstOrder, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_STATIC
    except PapError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_BOTTOM


if __name__ == "__main__":
    sys.exit(main())
