import numpy as np
import pytest

from seasongan.nets import DiscriminatorConfig, GeneratorConfig
from seasongan.training import TrainingConfig

TINY_CHANNELS = [4, 8]
TINY_SIZE = 16


def tiny_configs(**training):
    gen = GeneratorConfig(input_size=TINY_SIZE, encoder_channels=list(TINY_CHANNELS))
    disc = DiscriminatorConfig(input_size=TINY_SIZE, encoder_channels=list(TINY_CHANNELS), feature_dim=6)
    params = dict(batch_size=2, total_steps=10, seed=0, dtype="float64")
    params.update(training)
    return TrainingConfig(**params), gen, disc


@pytest.fixture
def tiny_data():
    rng = np.random.default_rng(42)
    return (rng.uniform(-1, 1, (8, 3, TINY_SIZE, TINY_SIZE)),
            rng.uniform(-1, 1, (8, 3, TINY_SIZE, TINY_SIZE)))


_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """``criterion(n, title, detail="")`` marks acceptance criterion ``n`` as passed.

    Criteria that are never marked (the test raised first) are reported as failed.
    """
    results = request.config.stash.setdefault(_ACCEPTANCE, {})
    number = request.node.get_closest_marker("criterion").args[0]
    results.setdefault(number, (False, request.node.name, "not reached"))

    def mark(title: str, detail: str = "") -> None:
        results[number] = (True, title, detail)

    return mark


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call" or call.excinfo is None:
        return
    results = item.config.stash.setdefault(_ACCEPTANCE, {})
    _, title, _ = results.get(marker.args[0], (False, item.name, ""))
    results[marker.args[0]] = (False, title, call.excinfo.exconly().splitlines()[0][:200])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_ACCEPTANCE, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        ok, title, detail = results[number]
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
