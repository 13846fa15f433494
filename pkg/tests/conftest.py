import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from presto.harness import FRUIT_REQUIREMENTS, ExperimentConfig, load_scenario  # noqa: E402
from presto.model import fruit_picking_model  # noqa: E402
from presto.properties import parse_properties  # noqa: E402
from presto.ratfunc import RationalFunction  # noqa: E402

DATA = os.path.join(os.path.dirname(__file__), "..", "src", "presto", "data")

# reference closed forms, written with 1-based reward symbols
GOLDEN = {
    "R1": r"(\alpha*p1*\beta*p2+(-1)*\alpha*p1)/(\alpha*p1*\beta*p2*p3+(-1))",
    "R2": r"(-1 * (\alpha*p1*\beta*p2*t3+t1+\alpha*p1*t2))/(\alpha*p1*\beta*p2*p3+(-1))",
    "R3": r"(-1 * (\alpha*p1*\beta*p2*e3+e1+\alpha*p1*e2))/(\alpha*p1*\beta*p2*p3+(-1))",
}
RENAME = {"t1": "t0", "t2": "t1", "t3": "t2", "e1": "e0", "e2": "e1", "e3": "e2"}


def golden(rid):
    return RationalFunction.parse(GOLDEN[rid]).rename(RENAME)


@pytest.fixture(scope="session")
def fruit():
    return fruit_picking_model()[0]


@pytest.fixture(scope="session")
def fruit_reqs():
    return parse_properties(FRUIT_REQUIREMENTS)


@pytest.fixture(scope="session")
def scenario():
    return load_scenario(ExperimentConfig(runs=1))
