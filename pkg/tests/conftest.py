import pytest

ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def record():
    """Register the verdict of an acceptance criterion for the terminal summary."""

    def _record(name: str, passed: bool, detail: str) -> None:
        ACCEPTANCE[name] = (bool(passed), detail)
        print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE, key=lambda n: int(n.split()[0])):
        passed, detail = ACCEPTANCE[name]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
