"""Shared fixtures: small synthetic panels and tiny network configurations."""

import numpy as np
import pytest

from epf.dataio import design_width
from epf.distnet import NetConfig
from epf.synthetic import generate_panel


@pytest.fixture(scope="session")
def synthetic():
    return generate_panel(260, seed=3)


@pytest.fixture(scope="session")
def panel(synthetic):
    return synthetic.panel


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tiny_config():
    return NetConfig(
        input_dim=design_width(31),
        hidden_sizes=(8,),
        activations=("tanh",),
        output_dim=31,
        dropout=0.0,
        learning_rate=1e-3,
        batch_size=16,
        max_epochs=3,
        patience=1,
        noise_sd=0.1,
    )
