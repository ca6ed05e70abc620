import numpy as np
import pytest

from phqnet import corpus
from phqnet.config import RunConfig
from phqnet.numerics import backend

BACKENDS = [name for name in ("python", "compiled") if name in backend.available()]


@pytest.fixture(params=BACKENDS)
def kernels(request):
    previous = backend.BACKEND
    backend.use(request.param)
    yield request.param
    backend.use(previous)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_corpus_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("synth8")
    corpus.generate_synthetic_corpus(8, 7, root)
    return root


@pytest.fixture(scope="session")
def small_corpus(small_corpus_dir):
    return corpus.load_corpus(small_corpus_dir, RunConfig())


CRITERIA = {}


@pytest.fixture
def criterion():
    """Record ``(number, passed, detail)`` for the end-of-run acceptance summary."""

    def record(number, title, passed, detail):
        CRITERIA[number] = (title, bool(passed), detail)
        print(f"criterion {number} {'PASS' if passed else 'FAIL'}: {title} ({detail})")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        title, ok, detail = CRITERIA[n]
        terminalreporter.write_line(f"{n}. {'PASS' if ok else 'FAIL'}  {title}: {detail}")
