import numpy as np
import pytest

from modeconsensus.network import build_ring

HIST = [5, 6, 7, 16, 1, 1, 1, 1, 1, 1]


def reference_labels(seed=0):
    labels = [a + 1 for a, c in enumerate(HIST) for _ in range(c)]
    np.random.default_rng(seed).shuffle(labels)
    return labels


@pytest.fixture(scope="session")
def ring40():
    return build_ring(40, reference_labels(), n_bar=50, universe=list(range(1, 11)))


ACCEPTANCE: list[tuple[int, str, bool, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.call_report = rep


@pytest.fixture
def criterion(request, capsys):
    """Record and print the verdict of one acceptance criterion."""
    number, title = request.node.get_closest_marker("criterion").args
    seen = []

    def verdict(ok: bool, detail: str = ""):
        seen.append((bool(ok), detail))

    yield verdict
    rep = getattr(request.node, "call_report", None)
    crashed = rep is not None and rep.failed and not seen
    ok = all(o for o, _ in seen) and not crashed and bool(seen)
    detail = "; ".join(d for _, d in seen if d) or (str(rep.longrepr).splitlines()[-1] if crashed else "")
    ACCEPTANCE.append((number, title, ok, detail))
    with capsys.disabled():
        print(f"\nACCEPTANCE {number} {'PASS' if ok else 'FAIL'}: {title}" + (f" [{detail}]" if detail else ""))


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {number}: {title}" + (f" [{detail}]" if detail else ""))
