import numpy as np
import pytest
from hypothesis import settings

from weyl_census.census import build_census
from weyl_census.presets import preset_system
from weyl_census.schottky import ensure_validated

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture(scope="session")
def sl2():
    return ensure_validated(preset_system("sl2"))


@pytest.fixture(scope="session")
def sl3():
    return ensure_validated(preset_system("sl3"))


@pytest.fixture(scope="session")
def sl2_census8(sl2):
    return build_census(sl2, 8)


@pytest.fixture(scope="session")
def sl3_census7(sl3):
    return build_census(sl3, 7)


def random_reduced(rng: np.random.Generator, l: int, n: int) -> tuple:
    w: list[int] = []
    while len(w) < n:
        c = int(rng.integers(2 * l))
        if w and c == w[-1] ^ 1:
            continue
        w.append(c)
    return tuple(w)


@pytest.fixture(scope="session")
def sl2_census10(sl2):
    return build_census(sl2, 10)


@pytest.fixture(scope="session")
def sl3_census10(sl3):
    return build_census(sl3, 10)


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, passed: bool, text: str) -> None:
    line = f"criterion {number:2d} [{'PASS' if passed else 'FAIL'}] {text}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
