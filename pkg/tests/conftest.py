import os
import sys
from pathlib import Path

import pytest

SRC = os.path.join(os.path.dirname(os.path.realpath(__file__)), '..', 'src')
if SRC not in sys.path:
    sys.path.insert(0, SRC)

from data_loaders.data_manager import DataManager


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: Belgian network solves, minutes rather than seconds")


def load(name, **overrides):
    network, _ = DataManager.load({'INSTANCE': name, **overrides})
    return network


def with_bounds(network, **p_bounds):
    """ Copy of `network` with node pressure bounds replaced, node_id=(p_lo, p_hi) in bar """
    nodes = [n._replace(beta_lo=p_bounds[n.id][0] ** 2, beta_hi=p_bounds[n.id][1] ** 2) if n.id in p_bounds else n
             for n in network.nodes]
    return network.with_nodes(nodes)


@pytest.fixture
def tiny3():
    return load('tiny-3')


@pytest.fixture
def tiny_loop():
    return load('tiny-loop')


@pytest.fixture
def instance_dir():
    return Path(SRC) / '..' / 'data' / 'instances'
