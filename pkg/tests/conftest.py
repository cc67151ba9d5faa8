import pytest

from switchstat import parse_problem

CROSS_LINEAR = """\
vars: x1 x2
objective: x1 + x2
switch: x1 | x2
"""

CROSS_QUADRATIC = """\
vars: x1 x2
objective: (x1-1)^2 + (x2-1)^2
switch: x1 | x2
"""

INSTABILITY_BOTH = """\
vars: x1 x2
objective: x1^2 + x2^2
switch: x1 | x2
"""

INSTABILITY_ONE = """\
vars: x1 x2
objective: x1 + x2^2
switch: x1 | x2
"""

STABLE_WITHOUT_ND2 = """\
vars: x1 x2
objective: x1^2 + x2^2
ineq: x2
"""


@pytest.fixture
def cross_linear():
    return parse_problem(CROSS_LINEAR)


@pytest.fixture
def cross_quadratic():
    return parse_problem(CROSS_QUADRATIC)


@pytest.fixture
def instability_both():
    return parse_problem(INSTABILITY_BOTH)


@pytest.fixture
def instability_one():
    return parse_problem(INSTABILITY_ONE)


@pytest.fixture
def stable_without_nd2():
    return parse_problem(STABLE_WITHOUT_ND2)
