from importlib import resources

import pytest

from soficdim.graph_model import load_any


def bundled(name):
    return resources.files("soficdim").joinpath("data", name).read_text()


def family(name):
    return load_any(bundled(name))[0]


@pytest.fixture(scope="session")
def ex1():
    return family("example1.matrix")


@pytest.fixture(scope="session")
def ex2():
    return family("example2.matrix")


@pytest.fixture(scope="session")
def ex3():
    return family("example3.matrix")


@pytest.fixture(scope="session")
def ex4():
    return family("example4.matrix")


ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = []


@pytest.fixture
def criterion(request):
    """Record a PASS/FAIL line for an acceptance criterion.

    Usage: ``with criterion(3, "what is checked"): ...``.  Lines are printed
    in the terminal summary so they survive output capture.
    """
    from contextlib import contextmanager
    import time

    lines = request.config.stash[ACCEPTANCE_KEY]

    @contextmanager
    def check(number, what):
        t0 = time.perf_counter()
        try:
            yield
        except BaseException:
            line = f"criterion {number:>2} FAIL  {what}  ({time.perf_counter() - t0:.1f}s)"
            lines.append((number, line))
            print(line)
            raise
        line = f"criterion {number:>2} PASS  {what}  ({time.perf_counter() - t0:.1f}s)"
        lines.append((number, line))
        print(line)

    return check


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(lines, key=lambda x: x[0]):
        terminalreporter.write_line(line)
