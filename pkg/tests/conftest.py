import numpy as np
import pytest

from lattice_homog import builtin_examples, graph_from_edges


def chain_graph():
    """Z x {0}, nearest-neighbour bonds, T = 1."""
    return graph_from_edges(1, 0, 1, [(0,)], [((0,), (0,), (1,), 1.0)])


def square_lattice(wx=1.5, wy=0.5):
    """Z^2, axis bonds with anisotropic weights; A = diag(2*wx, 2*wy) doubled."""
    return graph_from_edges(2, 0, 1, [(0, 0)],
                            [((0, 0), (0, 0), (1, 0), wx),
                             ((0, 0), (0, 0), (0, 1), wy)])


def skew_lattice(wx=1.0, wy=1.0, wd=0.25):
    """Z^2 with axis bonds plus a (1,1) diagonal; off-diagonal tensor entries."""
    return graph_from_edges(2, 0, 1, [(0, 0)],
                            [((0, 0), (0, 0), (1, 0), wx),
                             ((0, 0), (0, 0), (0, 1), wy),
                             ((0, 0), (0, 0), (1, 1), wd)])


@pytest.fixture(scope="session")
def examples():
    return builtin_examples()


@pytest.fixture
def chain():
    return chain_graph()


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
