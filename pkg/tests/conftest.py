import pytest

from fransonsim.harness import ScenarioConfig, run_fig2, run_fig3


@pytest.fixture(scope="session")
def default_config():
    return ScenarioConfig()


@pytest.fixture(scope="session")
def poly_config():
    return ScenarioConfig(phase_mode="polynomial")


@pytest.fixture(scope="session")
def fig3_traced(default_config):
    return run_fig3(default_config)


@pytest.fixture(scope="session")
def fig3_poly(poly_config):
    return run_fig3(poly_config)


@pytest.fixture(scope="session")
def fig2_traced(default_config):
    return run_fig2(default_config)


@pytest.fixture(scope="session")
def fig2_poly(poly_config):
    return run_fig2(poly_config)


_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def report(request):
    """Record one acceptance line; printed again in the terminal summary."""

    def _report(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        request.config.stash[_ACCEPTANCE_KEY].append((number, line))
        return ok

    return _report


def pytest_terminal_summary(terminalreporter, config):
    lines = sorted(config.stash.get(_ACCEPTANCE_KEY, []))
    if lines:
        terminalreporter.section("acceptance")
        for _, line in lines:
            terminalreporter.write_line(line)
