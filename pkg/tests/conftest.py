import numpy as np
import pytest

from crossap.grids import CKMRecord, Coord, GridMap, GridSpec, Scenario
from crossap.simulate import PropagationParams, gen_environment, gen_scenario


@pytest.fixture
def spec16():
    return GridSpec(width_cells=16, cell_size_m=1.0, gain_floor_db=-113.0, gain_span_db=100.0)


@pytest.fixture
def spec32():
    return GridSpec(width_cells=32, cell_size_m=1.0, gain_floor_db=-113.0, gain_span_db=100.0)


def random_gridmap(spec, rng):
    return GridMap(spec, rng.random((spec.width_cells, spec.width_cells)))


def random_scenario(spec, n_aps, rng, env_id="test"):
    w = spec.width_cells
    records = []
    for _ in range(n_aps):
        coord = Coord(int(rng.integers(0, w)), int(rng.integers(0, w)))
        records.append(CKMRecord(coord, random_gridmap(spec, rng)))
    return Scenario(spec, tuple(records), env_id)


def simulated_scenario(spec, n_aps=3, n_buildings=3, seed=0):
    env = gen_environment(spec, n_buildings, seed)
    return env, gen_scenario(env, n_aps, seed + 1, PropagationParams(), f"sim{seed}")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
