import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from novikov_besov.harness import ExperimentConfig, run_separation  # noqa: E402
from novikov_besov.littlewood_paley import BesovIndex, build_partition  # noqa: E402

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def partition():
    return build_partition()


@pytest.fixture(scope="session")
def idx22():
    return BesovIndex(2.0, 2.0, 2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def full_report():
    """The paired experiment for n = 4..8, s = 2, p = r = 2, T0 = 0.25 (minutes)."""
    cfg = ExperimentConfig()
    return cfg, run_separation(cfg)


@pytest.fixture(scope="session")
def small_config(tmp_path_factory):
    out = tmp_path_factory.mktemp("small")
    return ExperimentConfig(n_list=(3, 4), out_dir=out)


@pytest.fixture(scope="session")
def small_report(small_config):
    return run_separation(small_config)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1][1:])):
            terminalreporter.write_line(line)
