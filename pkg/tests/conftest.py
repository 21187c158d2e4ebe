import numpy as np
import pytest
from hypothesis import settings

from laygen.synth import GenConfig, generate_corpus

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture(scope="session")
def corpus():
    return generate_corpus(GenConfig(seed=11, n_layouts=200))


@pytest.fixture(scope="session")
def furniture_corpus():
    return generate_corpus(GenConfig(seed=5, n_layouts=60, mode="furniture", min_pieces=1))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_VERDICTS = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for an acceptance criterion; returns ok."""
    lines = request.config.stash.setdefault(_VERDICTS, [])

    def record(n, ok, detail):
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
