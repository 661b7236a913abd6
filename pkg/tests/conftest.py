import pytest
from hypothesis import HealthCheck, settings

from paplang.corpus import load

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

FACTORIAL = "mu f : R -> R. lam x : R. if (x > 0) (x * f (x - 1)) 1"


@pytest.fixture(scope="session")
def corpus():
    return load()


def first_order(entries):
    return [e for e in entries if not e.probabilistic]


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.LINES):
        terminalreporter.write_line(mod.LINES[n])
