import pytest

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def criterion():
    """Record one acceptance line, then fail the test if the check failed."""

    def record(label: str, ok: bool, detail: str) -> None:
        _ACCEPTANCE.append((label, ok, detail))
        print(f"{label}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(f"{label}: {'PASS' if ok else 'FAIL'}  {detail}")
