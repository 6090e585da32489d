import time

import pytest

_ACCEPTANCE = {}


class _Recorder:
    def __init__(self, number, title):
        self.number = number
        self.title = title
        self.start = time.perf_counter()

    def __call__(self, passed, detail):
        elapsed = time.perf_counter() - self.start
        status = "PASS" if passed else "FAIL"
        line = f"[{status}] criterion {self.number:>2}: {self.title} -- {detail} ({elapsed:.2f}s)"
        _ACCEPTANCE[self.number] = line
        print(line)
        assert passed, detail


@pytest.fixture
def criterion():
    return _Recorder


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[number])
