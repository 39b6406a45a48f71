import itertools
import math

import pytest

from conjclt.symbolic import WeightFunction, tree_length_weight

SQRT2 = math.sqrt(2.0)
SQRT3 = math.sqrt(3.0)


def brute_reduced(p, n):
    """All reduced words of length n by filtering every tuple of codes."""
    return [c for c in itertools.product(range(2 * p), repeat=n)
            if all(c[i + 1] != c[i] ^ 1 for i in range(n - 1))]


def turn_entries():
    """Depth-2 weight on F_2: value depends on the pair of consecutive letters."""
    letters = ["a1", "A1", "a2", "A2"]
    out = {}
    for x in letters:
        for y in letters:
            if x[1] == y[1] and x[0] != y[0]:
                continue  # inverse pair
            if x[1] == y[1]:
                v = 1.0 if x[1] == "1" else SQRT2
            elif x[0] == y[0]:
                v = 1.2
            else:
                v = SQRT3
            out[f"{x}.{y}"] = v
        out[x] = 1.4
    return out


@pytest.fixture(scope="session")
def tree():
    return tree_length_weight(2, [1.0, SQRT2])


@pytest.fixture(scope="session")
def turn():
    return WeightFunction.from_entries(2, 2, turn_entries(), name="turn")


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
