"""Acceptance catalog: one PASS/FAIL line per criterion.

Run ``pytest tests/test_acceptance.py -v`` (lines go to the terminal even
when output is captured) or ``python tests/test_acceptance.py``.
"""

import sys

import pytest

from isodisplay.acceptance import CRITERIA, run_all, summary

_RESULTS: dict[int, object] = {}


def _result(number: int):
    if number not in _RESULTS:
        _RESULTS[number] = CRITERIA[number - 1](0)
    return _RESULTS[number]


@pytest.mark.parametrize("number", range(1, len(CRITERIA) + 1), ids=lambda k: f"criterion_{k:02d}")
def test_criterion(number, capsys):
    res = _result(number)
    with capsys.disabled():
        print(f"\n{res.line()}")
    assert res.passed, res.detail


def main() -> int:
    results = run_all(0, echo=print)
    print(summary(results))
    return 0 if all(r.passed for r in results) else 1


if __name__ == "__main__":
    sys.exit(main())
