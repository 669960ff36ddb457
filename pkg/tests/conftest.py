import sys
import warnings

import numpy as np
import pytest

from mpemba import davies, models


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def qubit_cfg():
    return models.TwoLevelConfig()


@pytest.fixture(scope="session")
def qubit_model(qubit_cfg):
    return models.two_level_model(qubit_cfg)


@pytest.fixture(scope="session")
def qubit_spectrum(qubit_model):
    return davies.spectral_decomposition(qubit_model)


def _chain(kind, N, **kwargs):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        model = models.chain_model(models.SpinChainConfig(kind, N), 1.0, 0.1, **kwargs)
        return model, davies.spectral_decomposition(model)


@pytest.fixture(scope="session")
def tfi3():
    return _chain("tfi", 3)


@pytest.fixture(scope="session")
def tfi5():
    return _chain("tfi", 5)


@pytest.fixture(scope="session")
def xxz5():
    return _chain("xxz", 5)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "ACCEPTANCE_LOG", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
