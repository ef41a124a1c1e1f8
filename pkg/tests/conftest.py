import pytest

_RESULTS: dict[str, tuple[bool, str]] = {}


class AcceptanceLog:
    """Collects one verdict per criterion; repeated records are ANDed."""

    def record(self, criterion: str, passed: bool, detail: str) -> bool:
        prev = _RESULTS.get(criterion)
        if prev is not None:
            passed = passed and prev[0]
        _RESULTS[criterion] = (bool(passed), detail)
        print(self.line(criterion))
        return bool(passed)

    @staticmethod
    def line(criterion: str) -> str:
        passed, detail = _RESULTS[criterion]
        return f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}"


@pytest.fixture(scope="session")
def acceptance() -> AcceptanceLog:
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for key in sorted(_RESULTS):
        terminalreporter.write_line(AcceptanceLog.line(key))
