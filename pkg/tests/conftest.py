import numpy as np
import pytest
import torch

torch.set_num_threads(1)
torch.set_default_dtype(torch.float64)

from silhoufit import Camera, HandParams, make_stylized_hand


@pytest.fixture(scope="session")
def stylized():
    return make_stylized_hand()


@pytest.fixture(scope="session")
def stylized45():
    return make_stylized_hand(n_pc=45)


@pytest.fixture
def camera64():
    return Camera(fx=75.0, fy=75.0, cx=31.5, cy=31.5, width=64, height=64)


@pytest.fixture
def camera128():
    return Camera(fx=150.0, fy=150.0, cx=63.5, cy=63.5, width=128, height=128)


def random_params(rng: np.random.Generator, n_pc: int, spread=1.0) -> HandParams:
    p = HandParams.zeros(n_pc)
    p.theta = torch.from_numpy(rng.uniform(-spread, spread, size=n_pc))
    p.beta = torch.from_numpy(rng.uniform(-0.3, 0.3, size=10))
    p.rotation = torch.from_numpy(rng.uniform(-np.pi / 4, np.pi / 4, size=3))
    p.translation = torch.from_numpy(
        np.array([0.0, 0.0, 0.5]) + rng.uniform(-0.02, 0.02, size=3)
    )
    return p
