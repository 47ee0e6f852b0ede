# -*- coding: utf-8 -*-
"""
Shared fixtures: small graphs for gradient checks and a fast synthetic run
configuration.
"""
import numpy as np
import pytest

from cgcn.autodiff import Tensor
from cgcn.graph import GraphDataset, generate_sbm, normalize_adjacency
from cgcn.train import RunConfig


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def path_graph():
    """5 nodes on a path, 3 features, 2 clusters."""
    x = np.random.default_rng(1).standard_normal((5, 3))
    edges = ((0, 1), (1, 2), (2, 3), (3, 4))
    return GraphDataset(Tensor(x), edges, 2, (0, 0, 0, 1, 1), "path")


@pytest.fixture
def path_adj(path_graph):
    return normalize_adjacency(path_graph)


@pytest.fixture
def small_sbm():
    return generate_sbm(3, 20, 0.3, 0.02, 6, 4.0, seed=3)


@pytest.fixture
def fast_config():
    """A quick run on a 60 node SBM."""
    return RunConfig(name="fast",
                     synth_k=3,
                     synth_nodes=20,
                     synth_p_in=0.3,
                     synth_p_out=0.02,
                     synth_dim=6,
                     synth_sep=4.0,
                     hidden=(16, ),
                     latent_dim=4,
                     epochs_ae=3,
                     epochs_gae=3,
                     epochs_train=4,
                     kmeans_n_init=2,
                     seed=0)
