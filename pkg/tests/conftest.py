import pytest

_LINES: list[str] = []


class AcceptanceReport:
    """Collects one PASS/FAIL line per criterion plus indented detail lines."""

    def __init__(self, number: int, title: str):
        self.number = number
        self.title = title
        self.checks: list[tuple[str, bool, str]] = []

    def check(self, name: str, ok: bool, detail: str) -> bool:
        self.checks.append((name, bool(ok), detail))
        return bool(ok)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(ok for _, ok, _ in self.checks)

    def lines(self) -> list[str]:
        head = f"[{'PASS' if self.passed else 'FAIL'}] criterion {self.number:2d}: {self.title}"
        body = [f"    [{'PASS' if ok else 'FAIL'}] {name}: {detail}" for name, ok, detail in self.checks]
        return [head] + body

    def finish(self) -> None:
        text = self.lines()
        _LINES.extend(text)
        print("\n".join(text))
        failed = [name for name, ok, _ in self.checks if not ok]
        assert not failed, f"failed checks: {failed}"


@pytest.fixture
def acceptance():
    def make(number: int, title: str) -> AcceptanceReport:
        return AcceptanceReport(number, title)

    return make


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
