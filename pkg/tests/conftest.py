import itertools
import os

import numpy as np
import pytest
from hypothesis import settings

from hexatile.lattice import PathSystem

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def brute_force_tilings(n):
    """All path systems by filtering products of step sequences (independent of the oracle module)."""
    seqs = [s for s in itertools.product((0, 1), repeat=2 * n) if sum(s) == n]
    out = []
    for combo in itertools.product(seqs, repeat=n):
        H = np.array([[j] + [j + sum(c[: m + 1]) for m in range(2 * n)] for j, c in enumerate(combo)])
        if n == 1 or np.all(np.diff(H, axis=0) > 0):
            out.append(PathSystem(n, H))
    return out


@pytest.fixture(scope="session")
def small_tilings():
    return {n: brute_force_tilings(n) for n in (1, 2, 3)}


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
