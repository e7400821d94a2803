"""Acceptance criteria at their stated tolerances.

Each test prints one summary line plus the per-check detail (visible with ``-s``
or in the captured output of a failure). Criteria 3 and 9 currently fail on
the reference data and are left failing rather than relaxed.
"""
import time

import pytest

from spinphoton import acceptance, cli

_RESULTS: dict[int, acceptance.CriterionResult] = {}


def _run(number):
    if number not in _RESULTS:
        _RESULTS[number] = acceptance.CRITERIA[number - 1](0)
    return _RESULTS[number]


@pytest.mark.parametrize("number", range(1, 11), ids=lambda k: f"criterion_{k}")
def test_criterion(number):
    res = _run(number)
    print(res.report())
    assert res.passed, res.report()


def test_criterion_11_full_run(tmp_path, capsys):
    t0 = time.perf_counter()
    code = cli.main(["reproduce-paper", "--out", str(tmp_path)])
    total = time.perf_counter() - t0
    text = capsys.readouterr().out
    lines = [ln for ln in text.splitlines() if ln.startswith("criterion")]
    with capsys.disabled():
        print()
        for ln in lines:
            print(ln)
    assert [int(ln.split()[1]) for ln in lines] == list(range(1, 12))
    assert code in (0, 1)
    assert total < 120.0
