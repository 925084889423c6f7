import numpy as np
import pytest

from tensorica.datagen import MixingModel, SourceDistribution


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(params=["mixture_gaussian", "gaussian_bernoulli"])
def builtin_source(request):
    return SourceDistribution.from_name(request.param)


@pytest.fixture
def gb_model():
    return MixingModel.random(8, SourceDistribution.gaussian_bernoulli(), seed=3)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.REPORT, key=lambda s: int(s.split()[2])):
        terminalreporter.write_line(line)
