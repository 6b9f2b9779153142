"""One pass/fail line per acceptance criterion, at full tolerances."""

import pytest

from qinstrument.verify import load_golden, run_criterion


@pytest.fixture(scope="module")
def golden():
    return load_golden()


@pytest.mark.slow
@pytest.mark.parametrize("k", range(1, 13))
def test_criterion(k, golden, capsys):
    checks = run_criterion(k, golden)
    ok = all(c.passed for c in checks)
    failed = [c for c in checks if not c.passed]
    summary = "; ".join(f"{c.name}={c.line().split('measured=')[1]}" for c in (failed or checks[:1]))
    with capsys.disabled():
        print(f"\nACCEPTANCE criterion {k:2d}: {'PASS' if ok else 'FAIL'} | {summary}")
        for c in checks:
            print("    " + c.line())
    assert ok, "\n".join(c.line() for c in failed)
