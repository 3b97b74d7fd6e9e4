import pytest

# criterion number -> (passed, detail); passed is None for a skipped criterion
ACCEPTANCE: dict[int, tuple[bool | None, str]] = {}


def _status(passed: bool | None) -> str:
    return "SKIP" if passed is None else "PASS" if passed else "FAIL"


@pytest.fixture
def record():
    def _record(number: int, passed: bool | None, detail: str) -> None:
        ACCEPTANCE[number] = (passed, detail)
        print(f"criterion {number:2d}: {_status(passed)}  {detail}")
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {_status(passed)}  {detail}")
