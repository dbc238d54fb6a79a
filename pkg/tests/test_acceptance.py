"""Acceptance suite: each named check at its stated tolerance and runtime budget."""

import pytest

from hypmetric.verification import CHECKS, VerifyConfig, run_check


@pytest.mark.parametrize("name", list(CHECKS))
def test_acceptance(name, capsys):
    res = run_check(name, VerifyConfig())
    line = (f"{'PASS' if res.ok else 'FAIL'} {name}: {res.summary} "
            f"[{res.runtime:.2f}s of {res.budget:.0f}s budget]")
    with capsys.disabled():
        print("\n" + line)
    assert res.passed, res.details
    assert res.within_budget, f"{name} took {res.runtime:.1f}s, budget {res.budget:.0f}s"
