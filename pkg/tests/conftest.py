import pytest

from pisot_lab.pipeline import Lab

RAUZY = "1->12;2->13;3->1"
FIB = "1->12;2->1"
NONUNI = "1->1112;2->11"   # char poly x^2 - 3x - 2

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def rauzy():
    return Lab.from_text(RAUZY)


@pytest.fixture(scope="session")
def fib():
    return Lab.from_text(FIB)


@pytest.fixture(scope="session")
def nonuni():
    return Lab.from_text(NONUNI)


@pytest.fixture(scope="session")
def labs(rauzy, fib, nonuni):
    return {"rauzy": rauzy, "fib": fib, "nonuni": nonuni}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        tr.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
