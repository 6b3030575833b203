import pytest

import semalloc as sm


@pytest.fixture(scope="session")
def singapore() -> sm.ProblemInstance:
    return sm.load_problem(sm.data_file("singapore_demo.json"))


@pytest.fixture(scope="session")
def cost_structure() -> sm.ProblemInstance:
    return sm.load_problem(sm.data_file("cost_structure_demo.json"))


@pytest.fixture(scope="session")
def interest_switch() -> sm.ProblemInstance:
    return sm.load_problem(sm.data_file("interest_switch_demo.json"))


@pytest.fixture(scope="session")
def single_device() -> sm.ProblemInstance:
    return sm.load_problem(sm.data_file("single_device_demo.json"))


@pytest.fixture(scope="session")
def zero_demand() -> sm.ProblemInstance:
    return sm.load_problem(sm.data_file("zero_demand_demo.json"))
