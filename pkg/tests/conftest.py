import math

import numpy as np
import pytest
from scipy import integrate

from qlbe.physics import total_rate

ACCEPTANCE_LINES = {}


def report(criterion, ok, detail):
    """Record one acceptance line; the terminal summary prints them in order."""
    line = f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[criterion] = line
    print(line, flush=True)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: (int(str(k).rstrip("ab")), str(k))):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


def bin_probabilities(U, model, k_edges, xi_edges):
    """Probability of each (K, xi) bin under the jump density.

    The xi integral of exp(-(K/2 + U xi)^2) is done in closed form, leaving
    one quadrature in K per bin.
    """
    g = total_rate(U, model)
    sig = model.sigma
    out = np.empty((len(k_edges) - 1, len(xi_edges) - 1))
    for j in range(len(xi_edges) - 1):
        x0, x1 = xi_edges[j], xi_edges[j + 1]
        if U == 0:
            def f(K):
                return K * sig(K) * math.exp(-0.25 * K * K) * (x1 - x0)
        else:
            def f(K):
                return K * sig(K) * 0.5 * math.sqrt(math.pi) / U * (
                    math.erf(0.5 * K + U * x1) - math.erf(0.5 * K + U * x0))
        for i in range(len(k_edges) - 1):
            val, _ = integrate.quad(f, k_edges[i], k_edges[i + 1], epsabs=1e-14, epsrel=1e-12, limit=200)
            out[i, j] = val / (2.0 * math.sqrt(math.pi) * g)
    return out


@pytest.fixture
def bins():
    return bin_probabilities
