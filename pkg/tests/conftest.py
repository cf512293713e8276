import pytest

# criterion number -> list of (check name, passed, detail)
ACCEPTANCE: dict = {}


@pytest.fixture
def criterion(request):
    """Record an acceptance check: ``criterion(3, ok, "detail")``; failures still assert."""

    def record(number: int, ok: bool, detail: str = "") -> None:
        ACCEPTANCE.setdefault(number, []).append((request.node.name, bool(ok), detail))
        assert ok, detail

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        checks = ACCEPTANCE[number]
        status = "PASS" if all(ok for _, ok, _ in checks) else "FAIL"
        details = "; ".join(f"{name}: {detail}" for name, _, detail in checks)
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {details}")
