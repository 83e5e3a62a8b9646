"""Acceptance criteria, each run at full size through the shared invariant suites."""
import time

import pytest

from dilute_bose.tolerances import DEFAULT
from dilute_bose.verify import SUITES

CRITERIA = [
    (1, "scattering closed form", "scattering"),
    (2, "Fourier bound on w_p", "fourier_bound"),
    (3, "ideal-gas cross-oracle", "thermo"),
    (4, "leading free-energy correction", "delta_f"),
    (5, "cancellation identities", "identities"),
    (6, "trial-state oracle equivalence", "trial_oracle"),
    (7, "variational inequality", "variational"),
    (8, "energy improvement direction", "improvement"),
    (9, "entropy bound", "entropy"),
    (10, "error-pair census", "census"),
    (11, "bridge isometry and penalty", "bridge"),
    (12, "Hoeffding tail", "hoeffding"),
]


@pytest.mark.parametrize("number,title,suite", CRITERIA, ids=[c[2] for c in CRITERIA])
def test_criterion(number, title, suite):
    t0 = time.perf_counter()
    checks = SUITES[suite](False, 0, DEFAULT)
    elapsed = time.perf_counter() - t0
    failed = [c for c in checks if not c.passed]
    status = "PASS" if not failed else "FAIL"
    print(f"\n[{status}] criterion {number:2d}: {title} ({len(checks)} checks, {elapsed:.2f} s)")
    for c in checks:
        print(f"    {'ok ' if c.passed else 'BAD'} {c.name}: value={c.value:.6g} limit={c.limit:.6g}")
    assert not failed, [c.name for c in failed]
