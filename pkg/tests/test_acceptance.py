"""Every acceptance criterion at full size and its stated tolerance.

Each criterion prints one ``[PASS]``/``[FAIL]`` line; the lines are also
repeated in the pytest terminal summary. Run this file directly for the
lines alone.
"""

import pytest

from latepoints.verify import CRITERIA, run_criterion

ACCEPTANCE_LINES: list[str] = []


@pytest.mark.slow
@pytest.mark.parametrize("number", [num for num, _, _ in CRITERIA], ids=[f"{num:02d}-{name.replace(' ', '-')}" for num, name, _ in CRITERIA])
def test_criterion(number):
    res = run_criterion(number, quick=False)
    line = res.line()
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert res.passed, line


if __name__ == "__main__":
    for num, _, _ in CRITERIA:
        print(run_criterion(num).line(), flush=True)
