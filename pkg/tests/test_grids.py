import math

import numpy as np
import pytest

from crossap.grids import (
    CKMRecord,
    Coord,
    GridMap,
    GridSpec,
    Scenario,
    denormalize_db,
    drop_record,
    mse,
    mse_to_rmse,
    normalize_db,
)

from conftest import random_gridmap


def test_spec_validation():
    with pytest.raises(ValueError):
        GridSpec(width_cells=4)
    with pytest.raises(ValueError):
        GridSpec(cell_size_m=0)
    with pytest.raises(ValueError):
        GridSpec(gain_span_db=-1)


def test_normalize_endpoints(spec16):
    floor = spec16.gain_floor_db
    span = spec16.gain_span_db
    assert normalize_db(floor, spec16) == 0.0
    assert normalize_db(floor + span, spec16) == 1.0
    assert normalize_db(floor + span / 2, spec16) == 0.5


def test_normalize_clamps(spec16):
    assert normalize_db(spec16.gain_floor_db - 50, spec16) == 0.0
    assert normalize_db(spec16.gain_ceiling_db + 50, spec16) == 1.0


def test_normalize_rejects_nonfinite(spec16):
    with pytest.raises(ValueError):
        normalize_db(float("nan"), spec16)
    with pytest.raises(ValueError):
        denormalize_db(float("inf"), spec16)


def test_round_trip_within_range(spec16, rng):
    x = rng.uniform(spec16.gain_floor_db, spec16.gain_ceiling_db, size=200)
    back = denormalize_db(normalize_db(x, spec16), spec16)
    assert np.abs(back - x).max() < 1e-9


def test_gridmap_validation(spec16):
    w = spec16.width_cells
    with pytest.raises(ValueError):
        GridMap(spec16, np.zeros((w, w + 1)))
    with pytest.raises(ValueError):
        GridMap(spec16, np.full((w, w), 1.5))
    bad = np.zeros((w, w))
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        GridMap(spec16, bad)


def test_gridmap_immutable(spec16):
    m = GridMap(spec16, np.zeros((16, 16)))
    with pytest.raises(ValueError):
        m.values[0, 0] = 1.0


def test_mse_identical_is_zero(spec16, rng):
    a = random_gridmap(spec16, rng)
    assert mse(a, a) == 0.0
    assert mse(a, a, in_db=True) == 0.0


def test_mse_constant_offset_in_db(spec16, rng):
    # +2 dB everywhere = +0.02 normalized at 100 dB span
    vals = rng.uniform(0.0, 0.9, size=(16, 16))
    a = GridMap(spec16, vals)
    b = GridMap(spec16, vals + 0.02)
    assert mse(a, b, in_db=True) == pytest.approx(4.0, abs=1e-9)


def test_mse_matches_double_loop_oracle(rng):
    spec = GridSpec(width_cells=8)  # smallest allowed; oracle uses a 4x4 window idea scaled up
    a = random_gridmap(spec, rng)
    b = random_gridmap(spec, rng)
    acc = 0.0
    for i in range(8):
        for j in range(8):
            acc += (a.values[i, j] - b.values[i, j]) ** 2
    assert mse(a, b) == pytest.approx(acc / 64, rel=1e-12)


def test_mse_symmetry_and_permutation_invariance(spec16, rng):
    a = random_gridmap(spec16, rng)
    b = random_gridmap(spec16, rng)
    assert mse(a, b) == mse(b, a)
    perm = rng.permutation(16 * 16)
    ap = GridMap(spec16, a.values.ravel()[perm].reshape(16, 16))
    bp = GridMap(spec16, b.values.ravel()[perm].reshape(16, 16))
    assert mse(ap, bp) == pytest.approx(mse(a, b), rel=1e-12)


def test_mse_spec_mismatch(spec16):
    other = GridSpec(width_cells=16, gain_floor_db=-147.0)
    a = GridMap(spec16, np.zeros((16, 16)))
    b = GridMap(other, np.zeros((16, 16)))
    with pytest.raises(ValueError):
        mse(a, b)


def test_rmse_paper_pairs():
    assert mse_to_rmse(5.66) == pytest.approx(2.38, abs=0.01)
    assert mse_to_rmse(28.04) == pytest.approx(5.30, abs=0.01)
    assert mse_to_rmse(1275.58) == pytest.approx(35.72, abs=0.01)
    assert mse_to_rmse(0.0) == 0.0
    with pytest.raises(ValueError):
        mse_to_rmse(-1.0)


def test_rmse_bounded_by_max_abs_diff(spec16, rng):
    a = random_gridmap(spec16, rng)
    b = random_gridmap(spec16, rng)
    assert mse_to_rmse(mse(a, b)) <= np.abs(a.values - b.values).max() + 1e-12


def test_coord_bounds(spec16):
    Coord(0, 15).check_bounds(spec16)
    with pytest.raises(ValueError, match=r"row 16 outside \[0, 16\)"):
        Coord(16, 0).check_bounds(spec16)
    with pytest.raises(ValueError):
        Coord(-1, 0)


def test_scenario_invariants(spec16, rng):
    rec = CKMRecord(Coord(1, 2), random_gridmap(spec16, rng))
    with pytest.raises(ValueError):
        Scenario(spec16, ())
    other_spec = GridSpec(width_cells=16, gain_floor_db=-90.0)
    rec2 = CKMRecord(Coord(0, 0), random_gridmap(other_spec, rng))
    with pytest.raises(ValueError):
        Scenario(spec16, (rec, rec2))
    sc = Scenario(spec16, (rec, rec), "e")
    assert sc.n_aps == 2


def test_drop_record(spec16, rng):
    recs = tuple(
        CKMRecord(Coord(i, i), random_gridmap(spec16, rng)) for i in range(3)
    )
    sc = Scenario(spec16, recs, "e")
    reduced = drop_record(sc, 1)
    assert reduced.n_aps == 2
    assert reduced.records[0] is recs[0]
    assert reduced.records[1] is recs[2]
    with pytest.raises(IndexError):
        drop_record(sc, 3)


def test_gain_ceiling():
    spec = GridSpec()
    assert spec.gain_ceiling_db == pytest.approx(spec.gain_floor_db + spec.gain_span_db)
    assert math.isclose(denormalize_db(1.0, spec), spec.gain_ceiling_db)
