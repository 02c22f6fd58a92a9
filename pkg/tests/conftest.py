"""Shared fixtures: the reference market and the shipped two-player game."""
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lqmarket import (
    MarketSpecPA,
    NoiseSpec,
    ProsumerSpec,
    build_price_taking_market,
)

SCENARIO_DIR = Path(__file__).parent.parent / "scenarios"

REF_Q = np.array(
    [
        [2.38, -1.73, -0.15],
        [-1.73, 2.15, 0.16],
        [-0.15, 0.16, 0.52],
    ]
)
REF_NOISE_DIAG = (2.0, 2.0, 0.0)
REF_X0 = (25.0, 25.0, 50.0)


def make_ref_market(r=0.01, gamma=0.5):
    """The demand/supply/price market every numeric test is pinned to."""
    return build_price_taking_market(
        beta=0.995,
        sigma=0.900,
        phi1=0.5,
        phi2=0.25,
        noise=NoiseSpec.diagonal(REF_NOISE_DIAG),
        Q=REF_Q,
        r=r,
        gamma=gamma,
    )


def make_two_player_market(r=1.0, kappa=0.3):
    """The shipped consumer/producer game (same numbers as fig5_nash.yaml)."""
    consumer = ProsumerSpec(
        kind="consumer",
        A_block=np.array([[0.8, 0.0, 0.3], [0.0, 0.7, 0.2], [0.0, 0.0, 0.0]]),
        Q_block=np.array([[1.2, -1.0, 0.0], [-1.0, 1.1, 0.0], [0.0, 0.0, 0.2]]),
    )
    producer = ProsumerSpec(
        kind="producer",
        A_block=np.array([[0.85, 0.25], [0.0, 0.0]]),
        Q_block=np.array([[1.0, -0.5], [-0.5, 0.8]]),
    )
    return MarketSpecPA(
        consumers=(consumer,),
        producers=(producer,),
        kappa=kappa,
        zeta=0.0,
        r=r,
        gamma=0.9,
        noise=NoiseSpec.diagonal((0.2, 0.05, 0.0, 0.2, 0.0)),
    )


GAME_X0 = (10.0, 8.0, 1.0, 9.0, 1.0)


@pytest.fixture(scope="session")
def ref_market():
    return make_ref_market()


@pytest.fixture(scope="session")
def ref_system(ref_market):
    return ref_market.system


@pytest.fixture()
def x0_ref():
    return np.array(REF_X0)


@pytest.fixture(scope="session")
def game_spec():
    return make_two_player_market()


@pytest.fixture()
def game_x0():
    return np.array(GAME_X0)
