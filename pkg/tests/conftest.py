import numpy as np
import pytest

from dynsbm.core import MembershipSequence


def random_probability_tensor(rng, n, L):
    P = rng.random((n, n, L))
    P = 0.5 * (P + P.transpose(1, 0, 2))
    idx = np.arange(n)
    P[idx, idx, :] = 0.0
    return P


def random_membership(rng, n, L, m, n0=None):
    """Random sequence with every class occupied at every slice."""
    rows = []
    for _ in range(L):
        lab = rng.permutation(np.arange(n) % m)
        rows.append(lab)
    return MembershipSequence(np.array(rows), m)


def two_block(n, L, p_in, p_out):
    z = np.repeat([0, 1], [n // 2, n - n // 2])
    G = np.zeros((2, 2, L))
    G[0, 0] = G[1, 1] = p_in
    G[0, 1] = G[1, 0] = p_out
    return MembershipSequence.constant(z, L, 2), G


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_RESULTS = {}


def record_acceptance(number, passed, detail):
    ACCEPTANCE_RESULTS[number] = (bool(passed), detail)
    print(f"ACCEPTANCE {number}: {'PASS' if passed else 'FAIL'} - {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[k]
        terminalreporter.write_line(f"[{k}] {'PASS' if ok else 'FAIL'}: {detail}")
