import math

import numpy as np
import pytest

from distort_stop.model import CurvePayoff, DistortionFn, PayoffFn, TransformedPayoff


@pytest.fixture
def sqrt2():
    """``u(x) = 2 sqrt(x)``, the power payoff with gamma = 1/2 at beta = 1."""
    return TransformedPayoff(PayoffFn.power(0.5), 1.0)


@pytest.fixture
def identity_u():
    return CurvePayoff(lambda x: x, lambda x: np.ones_like(x), "linear")


@pytest.fixture
def w75():
    return DistortionFn.power(0.75)


@pytest.fixture
def rev_s():
    return DistortionFn.reverse_s_quadratic()


def close(a, b, rel=1e-9, abs_=0.0):
    return math.isclose(a, b, rel_tol=rel, abs_tol=abs_)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance") or __import__("sys").modules.get("tests.test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
