import pytest

from ecdlp_qubo.ec_core import CurveParams, EcdlpInstance, scalar_mul

# y^2 = x^3 + 2x + 1 over F_3: the order-7 curve containing (2,1), (0,1), (1,1)
F3 = (3, 2, 1, (2, 1))
# order-7 subgroups over the larger fields used for the sweep
ORDER7_CURVES = {
    3: F3,
    5: (5, 2, 1, (0, 1)),
    7: (7, 3, 5, (1, 3)),
    11: (11, 1, 1, (0, 1)),
}


def make_instance(p: int, y: int) -> EcdlpInstance:
    p, a, b, (px, py) = ORDER7_CURVES[p]
    c = CurveParams(a, b, p)
    P = c.point(px, py)
    return EcdlpInstance(c, P, scalar_mul(c, y, P))


@pytest.fixture
def f3_curve():
    return CurveParams(2, 1, 3)


@pytest.fixture
def f3_inst():
    """The worked example: P = (2,1), Q = (0,2) = [5]P."""
    return EcdlpInstance.from_coords(3, 2, 1, 2, 1, 0, 2)


@pytest.fixture
def f1021_inst():
    return EcdlpInstance.from_coords(1021, -3, 63, 74, 841, 1017, 824)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("tests.test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
