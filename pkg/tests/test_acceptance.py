"""End-to-end acceptance experiments, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line with the measured values;
the lines are repeated in the terminal summary.
"""

import pytest

from rwre.harness.acceptance import CRITERIA

from conftest import ACCEPTANCE_LINES


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number):
    res = CRITERIA[number]()
    line = res.line()
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert res.passed, line
