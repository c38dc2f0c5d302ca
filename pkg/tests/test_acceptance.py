"""The ten primary acceptance criteria at their stated tolerances.

Each test prints one ``[PASS]`` / ``[FAIL]`` line (visible with ``-s`` and in
the captured output of a failure). Criterion 6 is resolution limited at the
prescribed N = 32 grid and fails; see the README.
"""
import pytest

from biham import acceptance


@pytest.mark.parametrize("number", range(1, len(acceptance.CRITERIA) + 1))
def test_criterion(number, capsys):
    (crit,) = acceptance.run_all([number])
    with capsys.disabled():
        print("\n" + crit.line())
    assert crit.passed, crit.line()
