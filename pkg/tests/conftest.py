import pytest

_CRITERIA = {}


class CriterionReport:
    """Collects one pass/fail line per acceptance criterion."""

    def record(self, number: int, passed: bool, detail: str) -> None:
        _CRITERIA.setdefault(number, []).append((passed, detail))
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def criterion_report():
    return CriterionReport()


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        parts = _CRITERIA[number]
        ok = all(p for p, _ in parts)
        detail = "; ".join(d for _, d in parts)
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
