import pytest

from topoqst import LZSchedule, RabiSchedule, propagate_full

ACCEPTANCE_LINES: list[str] = []


def report(criterion: str, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def rabi_fig2():
    return RabiSchedule(epsilon=0.1, T=86.0)


@pytest.fixture(scope="session")
def lz_fig3():
    return LZSchedule(epsilon=0.1, delta0=0.2, tau=60.0, tau_z=120.0)


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # compile / load the numba kernels once so timing checks measure propagation only
    propagate_full(1, RabiSchedule(0.5, 1.0))
