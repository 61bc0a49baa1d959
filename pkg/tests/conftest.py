import numpy as np
import pytest

from colorizer.datasets import make_scenes
from colorizer.imageio import write_png
from colorizer.model import NetConfig, build_network, init_weights

SMALL_CHANNELS = (4, 8, 8)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def scenes():
    return make_scenes(12, size=64, seed=3)


@pytest.fixture
def image_dir(tmp_path, scenes):
    d = tmp_path / "images"
    d.mkdir()
    for i, img in enumerate(scenes[:10]):
        write_png(d / f"img_{i:02d}.png", img)
    return d


@pytest.fixture
def small_net():
    cfg = NetConfig(input_size=16, channels=SMALL_CHANNELS, seed=5)
    return init_weights(build_network(cfg), 5)


ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {title}: {detail}")
