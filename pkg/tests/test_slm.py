import numpy as np
import pytest

from latentdolly import (
    BinaryMask,
    DimensionError,
    LatentTensor,
    ModulationInputs,
    NoVisibleSourceError,
    Rng,
    modulate,
    sampling_mask,
)
from conftest import gtensor

DIMS = (1, 2, 4, 6, 6)


def _masks(occluded_frac=0.25, seed=0):
    gen = Rng(seed).split("mask").generator()
    cell = (gen.uniform(size=(1, DIMS[1], 1, DIMS[3], DIMS[4])) < occluded_frac).astype(np.uint8)
    m = np.broadcast_to(cell, DIMS).copy()
    d = 1 - m  # every visible cell is an eligible source
    return BinaryMask(m), BinaryMask(d)


def _inputs(seed=0):
    m, d = _masks(seed=seed)
    return ModulationInputs(gtensor(DIMS, "x", seed), gtensor(DIMS, "e", seed + 1), m, d)


def test_sampling_mask_formula():
    m, d = _masks()
    s = sampling_mask(m, d)
    assert np.array_equal(s.data, (1 - m.data) * d.data)


def test_visible_positions_pass_through_bit_exactly():
    inputs = _inputs()
    x_m, e_m = modulate(inputs, Rng(0).split("slm"))
    vis = inputs.occlusion.data == 0
    assert np.array_equal(x_m.data[vis], inputs.x0.data[vis])
    assert np.array_equal(e_m.data[vis], inputs.eps_inv.data[vis])


def test_occluded_values_come_from_source_pool():
    inputs = _inputs()
    x_m, e_m = modulate(inputs, Rng(0).split("slm"))
    s = sampling_mask(inputs.occlusion, inputs.depth_class).data.astype(bool)
    occ = inputs.occlusion.data.astype(bool)
    pool_x = set(inputs.x0.data[s].tolist())
    pool_e = set(inputs.eps_inv.data[s].tolist())
    assert set(x_m.data[occ].tolist()) <= pool_x
    assert set(e_m.data[occ].tolist()) <= pool_e


def test_x0_and_eps_share_source_indices():
    # position-encoded fixture: value at each cell equals its flat index,
    # so the copied values reveal the chosen source index directly
    b, f, c, h, w = DIMS
    pos = np.broadcast_to(
        np.arange(f * h * w, dtype=np.float64).reshape(1, f, 1, h, w), DIMS
    ).copy()
    m, d = _masks()
    inputs = ModulationInputs(LatentTensor(pos), LatentTensor(pos * 10.0), m, d)
    x_m, e_m = modulate(inputs, Rng(0).split("slm"))
    assert np.array_equal(x_m.data * 10.0, e_m.data)


def test_channel_coherence_moves_whole_vectors():
    inputs = _inputs()
    x_m, _ = modulate(inputs, Rng(0).split("slm"))
    occ = inputs.occlusion.data[0, :, 0].astype(bool)  # (F, H, W)
    src_vectors = inputs.x0.data[0].transpose(0, 2, 3, 1).reshape(-1, DIMS[2])
    out_vectors = x_m.data[0].transpose(0, 2, 3, 1)[occ]
    src_set = {tuple(v) for v in src_vectors}
    assert all(tuple(v) in src_set for v in out_vectors)


def test_deterministic_per_seed_and_sensitive_to_seed():
    inputs = _inputs()
    a1, _ = modulate(inputs, Rng(7).split("slm"))
    a2, _ = modulate(inputs, Rng(7).split("slm"))
    b1, _ = modulate(inputs, Rng(8).split("slm"))
    assert np.array_equal(a1.data, a2.data)
    assert not np.array_equal(a1.data, b1.data)


def test_no_occlusion_returns_copies_unchanged():
    x = gtensor(DIMS, "x")
    e = gtensor(DIMS, "e")
    zeros = BinaryMask(np.zeros(DIMS, dtype=np.uint8))
    ones = BinaryMask(np.ones(DIMS, dtype=np.uint8))
    x_m, e_m = modulate(ModulationInputs(x, e, zeros, ones), Rng(0))
    assert np.array_equal(x_m.data, x.data)
    assert np.array_equal(e_m.data, e.data)
    assert x_m is not x


def test_empty_source_pool_raises():
    x = gtensor(DIMS, "x")
    e = gtensor(DIMS, "e")
    m = np.zeros(DIMS, dtype=np.uint8)
    m[0, 0, :, 0, 0] = 1
    d = np.zeros(DIMS, dtype=np.uint8)  # no eligible sources anywhere
    with pytest.raises(NoVisibleSourceError):
        modulate(ModulationInputs(x, e, BinaryMask(m), BinaryMask(d)), Rng(0))


def test_per_channel_mode_draws_independently():
    inputs = _inputs()
    x_c, _ = modulate(inputs, Rng(0).split("slm"))
    x_p, _ = modulate(inputs, Rng(0).split("slm"), per_channel=True)
    vis = inputs.occlusion.data == 0
    assert np.array_equal(x_p.data[vis], inputs.x0.data[vis])
    assert not np.array_equal(x_c.data, x_p.data)


def test_source_uniformity_within_three_sigma():
    # 2 sources, many targets: each source should receive ~half the draws
    dims = (1, 4, 1, 100, 100)
    n_cells = 4 * 100 * 100
    m = np.ones(dims, dtype=np.uint8)
    m[0, 0, 0, 0, 0] = 0
    m[0, 0, 0, 0, 1] = 0
    d = 1 - m
    pos = np.arange(n_cells, dtype=np.float64).reshape(dims)
    inputs = ModulationInputs(LatentTensor(pos), LatentTensor(pos), BinaryMask(m), BinaryMask(d))
    x_m, _ = modulate(inputs, Rng(123).split("slm"))
    occ = m.astype(bool)
    n = occ.sum()
    count0 = int(np.sum(x_m.data[occ] == 0.0))
    sigma = np.sqrt(n * 0.25)
    assert abs(count0 - n / 2) <= 3 * sigma


def test_dim_mismatch_rejected():
    x = gtensor(DIMS, "x")
    e = gtensor((1, 2, 4, 6, 7), "e")
    m, d = _masks()
    with pytest.raises(DimensionError):
        ModulationInputs(x, e, m, d)
