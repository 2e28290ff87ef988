import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from causalfalsify.bayesnet import BayesNet, NodeSpec  # noqa: E402


def counter_net(N=5):
    nodes = [NodeSpec("phi0", "phi0", (), (0.8,))]
    nodes += [NodeSpec(f"phi{t}", f"phi{t}", (f"phi{t - 1}",), (1.0, 0.8)) for t in range(1, N + 1)]
    return BayesNet(nodes, f"phi{N}")


def sine_net():
    return BayesNet(
        [
            NodeSpec("phi12", "phi12", (), (0.9,)),
            NodeSpec("phi34", "phi34", (), (0.9,)),
            NodeSpec("phi", "phi", ("phi12", "phi34"), (1.0, 1.0, 1.0, 0.9)),
        ],
        "phi",
    )


def at_net():
    return BayesNet(
        [
            NodeSpec("phi_v", "phi_v", (), (0.99,)),
            NodeSpec("phi_w", "phi_w", (), (0.9,)),
            NodeSpec("phi", "phi", ("phi_v", "phi_w"), (1.0, 0.0, 0.0, 0.0)),
        ],
        "phi",
    )


@pytest.fixture
def chain():
    return counter_net()


@pytest.fixture
def sines():
    return sine_net()


@pytest.fixture
def transmission():
    return at_net()
