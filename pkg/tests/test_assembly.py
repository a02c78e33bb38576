import numpy as np
import pytest

from crossap.assembly import (
    AssemblyConfig,
    InputStack,
    assemble,
    feature_map,
    one_hot_map,
    preconvolve_target,
)
from crossap.grids import CKMRecord, Coord, GridMap, GridSpec

from conftest import random_gridmap, random_scenario


def brute_force_preconv(loc):
    """Oracle: zero-padded convolution with the 3x3 all-ones kernel, clamped."""
    w = loc.shape[0]
    padded = np.pad(loc, 1)
    out = np.zeros_like(loc)
    for i in range(w):
        for j in range(w):
            out[i, j] = min(1.0, padded[i : i + 3, j : j + 3].sum())
    return out


def test_one_hot_basics(spec16):
    m = one_hot_map(Coord(3, 2), GridSpec(width_cells=8))
    assert m.sum() == 1.0
    assert m[3, 2] == 1.0
    corner = one_hot_map(Coord(0, 0), spec16)
    assert corner[0, 0] == 1.0 and corner.sum() == 1.0
    with pytest.raises(ValueError):
        one_hot_map(Coord(16, 0), spec16)


def test_feature_map_endpoints(spec16, rng):
    gain = random_gridmap(spec16, rng)
    rec = CKMRecord(Coord(4, 5), gain)
    assert np.array_equal(feature_map(rec, 0.0), gain.values)
    assert np.array_equal(feature_map(rec, 1.0), one_hot_map(rec.ap_coord, spec16) + 0.0 * gain.values)


def test_feature_map_midpoint(spec16, rng):
    vals = rng.random((16, 16))
    vals[4, 5] = 0.8
    rec = CKMRecord(Coord(4, 5), GridMap(spec16, vals))
    fm = feature_map(rec, 0.5)
    assert fm[4, 5] == pytest.approx(0.9, abs=1e-12)
    with pytest.raises(ValueError):
        feature_map(rec, 1.5)


def test_preconvolve_interior_edge_corner():
    w = 5
    center = preconvolve_target(one_hot_map(Coord(2, 2), GridSpec(width_cells=8))[:5, :5].copy())
    assert center.sum() == 9
    assert (center[1:4, 1:4] == 1).all()
    loc = np.zeros((w, w))
    loc[0, 0] = 1.0
    assert preconvolve_target(loc).sum() == 4
    loc = np.zeros((w, w))
    loc[0, 2] = 1.0
    assert preconvolve_target(loc).sum() == 6


def test_preconvolve_matches_brute_force(rng):
    w = 9
    for _ in range(20):
        loc = np.zeros((w, w))
        loc[rng.integers(0, w), rng.integers(0, w)] = 1.0
        assert np.array_equal(preconvolve_target(loc), brute_force_preconv(loc))


def test_preconvolve_rejects_non_one_hot():
    with pytest.raises(ValueError):
        preconvolve_target(np.zeros((5, 5)))
    two = np.zeros((5, 5))
    two[0, 0] = two[1, 1] = 1.0
    with pytest.raises(ValueError):
        preconvolve_target(two)
    soft = np.zeros((5, 5))
    soft[2, 2] = 0.5
    with pytest.raises(ValueError):
        preconvolve_target(soft)


def test_assemble_channel_counts(spec16, rng):
    sc = random_scenario(spec16, 3, rng)
    cfg = AssemblyConfig(omega=0.5)
    training = assemble(sc, sc.records[1].ap_coord, cfg, exclude_index=1)
    assert training.n_channels == 3  # target + 2 remaining APs
    inference = assemble(sc, Coord(7, 7), cfg)
    assert inference.n_channels == 4


def test_assemble_exclude_mismatch(spec16, rng):
    sc = random_scenario(spec16, 3, rng)
    wrong = Coord(
        (sc.records[0].ap_coord.row + 1) % 16, sc.records[0].ap_coord.col
    )
    with pytest.raises(ValueError, match="exclude_index"):
        assemble(sc, wrong, AssemblyConfig(), exclude_index=0)


def test_assemble_padding(spec16, rng):
    sc = random_scenario(spec16, 3, rng)
    stack = assemble(sc, sc.records[0].ap_coord, AssemblyConfig(), exclude_index=0, pad_to=6)
    assert stack.n_channels == 6
    assert (stack.channels[3:] == 0).all()
    with pytest.raises(ValueError):
        assemble(sc, Coord(1, 1), AssemblyConfig(), pad_to=3)


def test_assemble_channel0_is_preconv_block(spec16, rng):
    for _ in range(20):
        sc = random_scenario(spec16, int(rng.integers(2, 5)), rng)
        target = Coord(int(rng.integers(0, 16)), int(rng.integers(0, 16)))
        stack = assemble(sc, target, AssemblyConfig(omega=float(rng.random())))
        ch0 = stack.channels[0]
        assert np.isin(ch0, (0.0, 1.0)).all()
        assert np.array_equal(ch0, brute_force_preconv(one_hot_map(target, spec16)))
        assert stack.channels.min() >= 0.0 and stack.channels.max() <= 1.0


def test_assemble_never_leaks_target(spec16, rng):
    # the supervision map must differ from every input channel
    for _ in range(50):
        sc = random_scenario(spec16, 4, rng)
        k = int(rng.integers(0, 4))
        stack = assemble(sc, sc.records[k].ap_coord, AssemblyConfig(omega=0.5), exclude_index=k)
        truth = sc.records[k].gain.values
        for ch in stack.channels:
            assert np.abs(ch - truth).max() > 0.0


def test_assemble_rotation_equivariance(spec16, rng):
    sc = random_scenario(spec16, 3, rng)
    w = spec16.width_cells
    rot_coord = lambda c: Coord(w - 1 - c.col, c.row)
    rot_records = tuple(
        CKMRecord(rot_coord(r.ap_coord), GridMap(spec16, np.rot90(r.gain.values)))
        for r in sc.records
    )
    rot_sc = type(sc)(spec16, rot_records, sc.environment_id)
    cfg = AssemblyConfig(omega=0.3)
    target = sc.records[2].ap_coord
    a = assemble(sc, target, cfg, exclude_index=2)
    b = assemble(rot_sc, rot_coord(target), cfg, exclude_index=2)
    for ca, cb in zip(a.channels, b.channels):
        assert np.array_equal(np.rot90(ca), cb)


def test_input_stack_validation(spec16):
    bad = np.full((2, 16, 16), 0.5)  # channel 0 not binary
    with pytest.raises(ValueError):
        InputStack(bad, Coord(0, 0))
    oob = np.zeros((2, 16, 16))
    oob[1, 0, 0] = 1.5
    with pytest.raises(ValueError):
        InputStack(oob, Coord(0, 0))


def test_config_validation():
    with pytest.raises(ValueError):
        AssemblyConfig(omega=-0.1)
    with pytest.raises(ValueError):
        AssemblyConfig(omega=1.1)
