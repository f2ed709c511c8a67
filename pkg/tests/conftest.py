import pytest

from polyshare import programs
from polyshare.analysis import analyze
from polyshare.scheduler import Scheduler

EX1_BINDING = {"n1": 2, "n2": 3, "n3": 2}
TRIPLE = frozenset({"s1WC->s2RC", "s2WE->s2RE", "s2WE->s2WE"})


@pytest.fixture(scope="session")
def ex1():
    return programs.load("example1")


@pytest.fixture(scope="session")
def ex1_analysis(ex1):
    return analyze(ex1)


@pytest.fixture(scope="session")
def ex1_family(ex1_analysis):
    return Scheduler(ex1_analysis).apriori_search()


@pytest.fixture(scope="session")
def mm():
    return programs.load("two_matmul")


@pytest.fixture(scope="session")
def mm_analysis(mm):
    return analyze(mm)


@pytest.fixture(scope="session")
def mm_family(mm_analysis):
    return Scheduler(mm_analysis).apriori_search()


@pytest.fixture(scope="session")
def opposite():
    return programs.load("opposite")


@pytest.fixture(scope="session")
def opposite_analysis(opposite):
    return analyze(opposite)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion reported by the suite")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep
