import contextlib

import numpy as np
import pytest

from matbridge import surrogate as S

ACCEPTANCE_LINES: list[str] = []


@contextlib.contextmanager
def criterion(label: str):
    try:
        yield
    except BaseException as exc:
        ACCEPTANCE_LINES.append(f"FAIL  {label}  ({type(exc).__name__}: {str(exc).splitlines()[0][:160]})")
        raise
    ACCEPTANCE_LINES.append(f"PASS  {label}")


@pytest.fixture
def acceptance():
    return criterion


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def surrogate_146():
    ds, pressures = S.generate_dataset(S.SurrogateParams(sample_count=146, seed=1))
    return ds


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
