import numpy as np
import pytest

from needlet_lab import (
    GammaSpec,
    ScaleParams,
    build_scale_sequence,
    build_weight_system,
    needlet_frame,
)

# Desk configuration used throughout: recursive, p=1, gamma=2, s0=1, so the
# centers are the triangular numbers S_j = (j+1)(j+2)/2.
DESK = dict(p=1.0, gamma=GammaSpec.constant(2.0), s0=1.0, constructor="recursive")


@pytest.fixture(scope="session")
def desk_seq():
    return build_scale_sequence(ScaleParams(j_max=8, **DESK))


@pytest.fixture(scope="session")
def desk_ws(desk_seq):
    return build_weight_system(desk_seq)


@pytest.fixture(scope="session")
def frame_j4(desk_ws):
    return needlet_frame(desk_ws, 4)


@pytest.fixture(scope="session")
def frame_j5(desk_ws):
    return needlet_frame(desk_ws, 5)


def random_unit_vectors(rng, n):
    z = 2.0 * rng.random(n) - 1.0
    phi = 2.0 * np.pi * rng.random(n)
    st = np.sqrt(1.0 - z**2)
    return np.column_stack([st * np.cos(phi), st * np.sin(phi), z])
