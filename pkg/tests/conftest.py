import numpy as np
import pytest

_CRITERIA_KEY = pytest.StashKey[dict]()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_configure(config):
    config.stash[_CRITERIA_KEY] = {}


class CriterionRecorder:
    def __init__(self, store, number, title):
        self.store, self.number, self.title = store, number, title

    def check(self, ok: bool, detail: str) -> None:
        """Record the verdict, then fail the test if it is negative."""
        self.store[self.number] = (self.title, bool(ok), detail)
        assert ok, f"criterion {self.number} ({self.title}): {detail}"


@pytest.fixture
def criterion(request):
    """``criterion(n, title)`` returns a recorder for one acceptance criterion."""
    store = request.config.stash[_CRITERIA_KEY]
    made = []

    def make(number, title):
        made.append(CriterionRecorder(store, number, title))
        return made[-1]

    yield make
    for rec in made:
        store.setdefault(rec.number, (rec.title, False, "raised before reaching a verdict"))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_CRITERIA_KEY, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(store):
        title, ok, detail = store[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {title}: {detail}")
