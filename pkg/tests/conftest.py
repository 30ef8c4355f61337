import sys

import numpy as np
import pytest

from stratnmf.engine import Model, StrataDataset


def random_problem(rng, s=None, r=None, max_dim=30, min_extra=2):
    """Random dataset and model with ``m_i, n >= r + min_extra``."""
    s = int(rng.integers(1, 5)) if s is None else s
    r = int(rng.integers(1, 7)) if r is None else r
    lo = min(r + min_extra, max_dim)
    n = int(rng.integers(lo, max_dim + 1))
    rows = [int(rng.integers(lo, max_dim + 1)) for _ in range(s)]
    scale = rng.uniform(0.1, 10.0)
    strata = tuple(rng.uniform(0.0, scale, size=(m, n)) for m in rows)
    model = Model(
        v=tuple(rng.uniform(0.0, 1.0, size=n) for _ in range(s)),
        W=tuple(rng.uniform(0.0, 1.0, size=(m, r)) for m in rows),
        H=rng.uniform(0.0, 1.0, size=(r, n)),
    )
    return StrataDataset(strata), model


def exact_problem(rng, s, r, rows, n):
    """Dataset that the returned model reconstructs exactly: A = 1 v^T + W H."""
    H = rng.uniform(0.0, 1.0, size=(r, n))
    W = [rng.uniform(0.0, 1.0, size=(m, r)) for m in rows]
    v = [rng.uniform(0.0, 1.0, size=n) for _ in range(s)]
    strata = tuple(Wi @ H + vi[None, :] for Wi, vi in zip(W, v))
    return StrataDataset(strata), Model(v=tuple(v), W=tuple(W), H=H)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("tests.test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for line in results:
        terminalreporter.write_line(line)
