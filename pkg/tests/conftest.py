from pathlib import Path

import numpy as np
import pytest

from sosfrac import FractionalProgram, Polynomial

FIXTURES = Path(__file__).parent / "fixtures"


def xs(n):
    return [Polynomial.variable(i, n) for i in range(n)]


@pytest.fixture
def fp1():
    x1, x2 = xs(2)
    return FractionalProgram(
        2,
        x1**8 + x1**2 + x1 * x2 + x2**2,
        x1**2 + x2**2 - 8,
        [x1**2 + x2**2 - 4, 1 - x1, 1 - x2],
    )


@pytest.fixture
def fp0():
    (x,) = xs(1)
    return FractionalProgram(1, Polynomial.constant(1, 1.0), x, [x + 1])


@pytest.fixture
def unit_denominator():
    (x,) = xs(1)
    return FractionalProgram(1, x**2, Polynomial.constant(1, -1.0), [x**2 - 1])


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def random_poly(rng, n, degree, density=0.6):
    from sosfrac import monomial_basis

    terms = {a: rng.normal() for a in monomial_basis(n, degree) if rng.random() < density}
    return Polynomial(n, terms)


def central_gradient(fun, x, h=1e-5):
    x = np.asarray(x, dtype=float)
    out = []
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        out.append((fun(x + e) - fun(x - e)) / (2 * h))
    return np.array(out)


def random_sos_convex(rng, n, max_degree=4):
    """Sum of squared affine forms plus separable even powers plus an affine part."""
    x = xs(n)
    p = Polynomial(n)
    for _ in range(rng.integers(1, n + 2)):
        aff = rng.normal() + sum(rng.normal() * xi for xi in x)
        p = p + aff**2
    for xi in x:
        k = int(rng.integers(1, max_degree // 2 + 1))
        p = p + float(rng.uniform(0.1, 1.0)) * xi ** (2 * k)
    return p + sum(rng.normal() * xi for xi in x)


# acceptance criterion number -> (passed, summary line)
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, line = ACCEPTANCE[k]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {k}: {line}")
