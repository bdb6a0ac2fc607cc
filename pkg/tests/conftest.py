import os
import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from utils.nn import assign_params  # noqa: E402
from utils.geometry import Circle, Pose, Rect, Vec2, World  # noqa: E402
from utils.worlds import simple_arena  # noqa: E402


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: long training runs, enabled with NAVLAB_SLOW=1')


def pytest_collection_modifyitems(config, items):
    if os.environ.get('NAVLAB_SLOW') == '1':
        return
    skip = pytest.mark.skip(reason='set NAVLAB_SLOW=1 to run training-trend checks')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip)


# ===================
# WORLDS
# ===================

BOUNDS = Rect(-5.0, -5.0, 5.0, 5.0)
REGION = Rect(-4.0, -4.0, 4.0, 4.0)

EMPTY_WORLD_TEXT = """\
BOUNDS -5 -5 5 5
SPAWN 0 0 0
TARGET_REGION -4 -4 4 4
"""


def make_world(*obstacles, target=Vec2(2.0, 2.0), spawn=Pose.at(0.0, 0.0), clearance=0.5) -> World:
    return World(tuple(obstacles), BOUNDS, target, spawn, REGION, clearance)


@pytest.fixture
def empty_world() -> World:
    """Bounds only, no obstacles."""
    return make_world()


@pytest.fixture
def box_world() -> World:
    return simple_arena()


@pytest.fixture
def circle_world() -> World:
    return make_world(Circle(Vec2(2.0, 0.0), 0.5), target=Vec2(-2.0, -2.0))


@pytest.fixture
def empty_world_file(tmp_path) -> Path:
    path = tmp_path / 'empty.world'
    path.write_text(EMPTY_WORLD_TEXT)
    return path


# ===================
# NETWORKS
# ===================

def zero_params(network):
    """All weights and biases of network set to zero, in place."""
    assign_params(network.params, np.zeros(sum(v.size for v in network.params.values())))
    return network
