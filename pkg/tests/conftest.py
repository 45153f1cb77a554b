import math

import pytest

from zollwidth import flow, widths
from zollwidth.metrics import EvenProfile, OddProfile, make_control_metric, make_metric, round_metric

TWO_PI = 2.0 * math.pi


def zoll(eps):
    return make_metric(OddProfile.from_epsilon(eps))


@pytest.fixture(scope="session")
def round_g():
    return round_metric()


@pytest.fixture(scope="session")
def zoll03():
    return zoll(0.3)


@pytest.fixture(scope="session")
def even_control():
    return make_control_metric(EvenProfile.bump(0.5))


@pytest.fixture(scope="session")
def certified_store():
    """In-memory store holding passing 100-start runs for round and eps = 0.1, 0.2, 0.3."""
    store = widths.CertificationStore()
    runs = {}
    for eps in (0.0, 0.1, 0.2, 0.3):
        g = zoll(eps)
        run = flow.certify_metric(g, 100, seed=0)
        store.record_run(g, run, seed=0)
        runs[eps] = run
    store.runs = runs
    return store


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion."""
    lines = []
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            if getattr(rep, "when", "call") != "call":
                continue
            props = dict(getattr(rep, "user_properties", ()))
            if "criterion" in props:
                lines.append((props["criterion"], "PASS" if rep.passed else "FAIL"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for text, verdict in sorted(lines):
            terminalreporter.write_line(f"{verdict}  {text}")
