"""The bundled program corpus and its manifest."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from .evaluator import eval as eval_term
from .ppl import density_term
from .syntax import ProbTerm, Term, parse, parse_term
from .typecheck import check_closed
from .types import show_type
from .values import Value

TAGS = {"total", "partial", "higher-order", "recursive", "probabilistic", "ad-failure"}


def corpus_dir() -> Path:
    return Path(str(resources.files("paplang") / "corpus"))


@dataclass(frozen=True)
class Expectation:
    args: tuple
    fuel: int
    outcome: str


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    path: Path
    type: str
    tags: frozenset
    sampler_box: tuple
    budget: int = 4
    expect: tuple = ()
    ad_failure: dict | None = field(default=None, hash=False)
    trace_length: int | None = None

    @cached_property
    def program(self) -> Term | ProbTerm:
        return parse(self.path.read_text())

    @property
    def probabilistic(self) -> bool:
        return "probabilistic" in self.tags

    @cached_property
    def term(self) -> Term:
        """A closed first-order term: the program, or its density at the fixed trace length."""
        if self.probabilistic:
            return density_term(self.program, self.trace_length)
        return self.program

    @property
    def dim(self) -> int:
        return len(self.sampler_box)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        lo, hi = np.array(self.sampler_box, dtype=float).T
        return rng.uniform(lo, hi)

    def samples(self, rng: np.random.Generator, count: int) -> np.ndarray:
        lo, hi = np.array(self.sampler_box, dtype=float).T
        return rng.uniform(lo, hi, size=(count, len(lo)))

    def check_type(self) -> str:
        if self.probabilistic:
            return "prob"
        return show_type(check_closed(self.program)[1])


def parse_arg(text: str) -> Value:
    """A command-line argument written as a closed ground term, e.g. ``3``, ``(1, 2)``, ``[1, 2]``."""
    out = eval_term(parse_term(text), fuel=0)
    if not out.halted:
        raise ValueError(f"argument {text!r} does not evaluate: {out}")
    return out.value


def _entry(d: dict, root: Path) -> CorpusEntry:
    tags = frozenset(d["tags"])
    unknown = tags - TAGS
    if unknown:
        raise ValueError(f"{d['name']}: unknown tags {sorted(unknown)}")
    if "ad-failure" in tags and not d.get("ad_failure", {}).get("point"):
        raise ValueError(f"{d['name']}: ad-failure entries must list the failure point")
    if "probabilistic" in tags and d.get("trace_length") is None:
        raise ValueError(f"{d['name']}: probabilistic entries need a trace_length")
    expect = tuple(Expectation(tuple(e["args"]), e["fuel"], e["outcome"]) for e in d.get("expect", ()))
    return CorpusEntry(
        name=d["name"],
        path=root / d["file"],
        type=d["type"],
        tags=tags,
        sampler_box=tuple(tuple(float(v) for v in b) for b in d["sampler"]),
        budget=d.get("budget", 4),
        expect=expect,
        ad_failure=d.get("ad_failure"),
        trace_length=d.get("trace_length"),
    )


@lru_cache(maxsize=4)
def load(root: Path | None = None) -> tuple[CorpusEntry, ...]:
    root = corpus_dir() if root is None else Path(root)
    data = json.loads((root / "manifest.json").read_text())
    return tuple(_entry(d, root) for d in data["programs"])


def entry(name: str) -> CorpusEntry:
    for e in load():
        if e.name == name:
            return e
    raise KeyError(name)


def resolve(path: str) -> Path:
    """A program path; names missing on disk fall back to the bundled corpus."""
    p = Path(path)
    if p.exists():
        return p
    q = corpus_dir() / p.name
    if q.exists():
        return q
    q = corpus_dir() / f"{p.name}.pap"
    if q.exists():
        return q
    raise FileNotFoundError(path)
