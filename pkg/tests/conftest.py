import numpy as np
import pytest

from hetprop.network import CONCEPTS, PAIRS, Concept, HeterogeneousNetwork


def make_net(P, R, coupling=0.5, names=None):
    """Network from raw matrices keyed by concept / concept pair."""
    sizes = {c: np.asarray(P[c]).shape[0] for c in CONCEPTS}
    if names is None:
        names = {c: [f"{c.label[:2]}{i:03d}" for i in range(sizes[c])] for c in CONCEPTS}
    return HeterogeneousNetwork.build(names, P, R, coupling)


def star_net(coupling=1.0, disease_target=0.0):
    """One drug, one disease, one target; the drug relates to both others."""
    P = {c: np.zeros((1, 1)) for c in CONCEPTS}
    R = {
        (Concept.DRUG, Concept.DISEASE): np.ones((1, 1)),
        (Concept.DRUG, Concept.TARGET): np.ones((1, 1)),
        (Concept.DISEASE, Concept.TARGET): np.full((1, 1), disease_target),
    }
    return make_net(P, R, coupling)


def stacked_ids(net):
    return np.concatenate([3 * np.arange(net.sizes[c]) + int(c) for c in CONCEPTS])


@pytest.fixture
def three_vertex():
    return star_net()


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
