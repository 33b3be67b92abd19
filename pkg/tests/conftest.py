import numpy as np
import pytest

from twisted_isometries.lattice import LatticeSpec
from twisted_isometries.monomial_ops import TwistedTuple, compose, diag_op, direct_sum, model_tuple, mult_op

LAM = np.exp(2j * np.pi * 0.3)
MU = np.exp(2j * np.pi * 0.31)
OMEGA = np.exp(2j * np.pi / 3)


def scalar_model(N=6, lam=LAM):
    return model_tuple(LatticeSpec(2, 1, N), [1, 2], {(1, 2): [[lam]]})


def example21(N=5, lam=LAM):
    s = LatticeSpec(2, 1, N)
    s2 = compose(mult_op(s, 2), diag_op(s, 1, [[lam]]))
    b1 = TwistedTuple([mult_op(s, 1), s2], {(1, 2): [[np.conj(lam)]]})
    b2 = TwistedTuple([s2, mult_op(s, 1)], {(1, 2): [[lam]]})
    return direct_sum(b1, b2)


@pytest.fixture
def lam():
    return LAM


ACCEPTANCE = {}


def record_acceptance(idx: int, ok: bool, detail: str):
    line = f"criterion {idx:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[idx] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for idx in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[idx])
