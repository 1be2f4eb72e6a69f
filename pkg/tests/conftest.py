import os
import shutil

import pytest

from cwlforge import CORPUS, Engine, RunnerConfig


@pytest.fixture
def corpus():
    return CORPUS


@pytest.fixture
def make_engine(tmp_path):
    engines = []

    def make(executor="thread-pool", workers=2, **kw):
        kw.setdefault("cleanup", False)
        cfg = RunnerConfig(executor=executor, workers=workers, workdir=str(tmp_path / "work"), **kw)
        e = Engine(cfg)
        engines.append(e)
        return e

    yield make
    for e in engines:
        e.shutdown(drain=False)


@pytest.fixture
def engine(make_engine):
    return make_engine()


@pytest.fixture
def tool_dir(tmp_path):
    """Copy of the corpus in a scratch directory, for tests that run in place."""
    d = tmp_path / "tools"
    shutil.copytree(CORPUS, d)
    return d


def sandbox_count(workdir):
    if not os.path.isdir(workdir):
        return 0
    return sum(len(os.listdir(os.path.join(workdir, run))) for run in os.listdir(workdir))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
