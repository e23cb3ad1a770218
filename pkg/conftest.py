"""Общие настройки pytest: профили hypothesis, маркер slow, тихий лог"""

import os

os.environ.setdefault("LOG_TO_FILE", "false")
os.environ.setdefault("LOG_LEVEL", "WARNING")

import hypothesis
import numpy as np
import pytest

np.seterr(all="warn")

hypothesis.settings.register_profile("default", max_examples=50, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.register_profile("ci", max_examples=200, deadline=None, derandomize=True)
hypothesis.settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "default"))


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="запускать медленные тесты")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: полные прогоны задач из каталога problems/")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow") or os.getenv("RUN_SLOW") == "1":
        return
    skip_slow = pytest.mark.skip(reason="нужен --runslow или RUN_SLOW=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)
