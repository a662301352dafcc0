import numpy as np
import pytest

ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion and fail the test if any of its checks fail.

    ``checks`` is a list of ``(text, ok)`` pairs; the line is echoed in the
    terminal summary so every run shows one PASS/FAIL line per criterion.
    """
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, [])

    def record(number, title, checks):
        ok = all(flag for _, flag in checks)
        detail = "; ".join(f"{text} [{'ok' if flag else 'MISS'}]" for text, flag in checks)
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {title}: {detail}"
        lines.append((number, line))
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
