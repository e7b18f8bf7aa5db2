import math

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


def simpson(f, a, b, tol=1e-12, depth=60):
    """Adaptive Simpson quadrature, independent of the package quadrature."""

    def rec(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6 * (fa + 4 * flm + fm)
        right = (b - m) / 6 * (fm + 4 * frm + fb)
        if depth <= 0 or abs(left + right - whole) <= 15 * tol:
            return left + right + (left + right - whole) / 15
        return (rec(a, m, fa, flm, fm, left, tol / 2, depth - 1)
                + rec(m, b, fm, frm, fb, right, tol / 2, depth - 1))

    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    return rec(a, b, fa, fm, fb, (b - a) / 6 * (fa + 4 * fm + fb), tol, depth)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def mp_log_trace(beta, mu, lam, r, n_max, dps=40):
    """High-precision ``ln Tr exp`` of the single-site matrix via mpmath."""
    import mpmath as mp

    with mp.workdps(dps):
        beta, mu, lam, r = (mp.mpf(str(v)) if not isinstance(v, mp.mpf) else v
                            for v in (beta, mu, lam, r))
        A = mp.matrix(n_max + 1, n_max + 1)
        for i in range(n_max + 1):
            A[i, i] = beta * ((mu - 1) * i - lam * i * (i - 1))
            if i < n_max:
                A[i, i + 1] = A[i + 1, i] = beta * r * mp.sqrt(i + 1)
        e = mp.eigsy(A, eigvals_only=True)
        m = max(e)
        return m + mp.log(sum(mp.exp(x - m) for x in e))


def mp_ptilde_dd_fd(beta, mu, lam, n_max, h="1e-4"):
    """Central difference of ``beta^-1 log_trace`` in ``r`` at 0, in high precision."""
    import mpmath as mp

    with mp.workdps(40):
        h = mp.mpf(h)
        f = lambda r: mp_log_trace(beta, mu, lam, r, n_max) / mp.mpf(str(beta))
        return float((f(h) - 2 * f(mp.mpf(0)) + f(-h)) / h**2)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
