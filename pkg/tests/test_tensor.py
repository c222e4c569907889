import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latentdolly import (
    BinaryMask,
    DegenerateInputError,
    DimensionError,
    LatentTensor,
    ParameterError,
    Rng,
    adain,
    cosine,
    gaussian,
    norm_deviation,
    stats,
)
from conftest import gtensor

DIMS = (2, 3, 4, 5, 6)


def test_latent_tensor_requires_five_axes():
    with pytest.raises(DimensionError):
        LatentTensor(np.zeros((2, 3, 4)))


def test_latent_tensor_rejects_nonfinite():
    a = np.zeros(DIMS)
    a[0, 0, 0, 0, 0] = np.nan
    with pytest.raises(DegenerateInputError):
        LatentTensor(a)


def test_latent_tensor_casts_integer_input_to_float32():
    t = LatentTensor(np.zeros(DIMS, dtype=np.int32))
    assert t.dtype == np.float32


def test_latent_tensor_data_is_readonly():
    t = gtensor(DIMS)
    with pytest.raises(ValueError):
        t.data[0, 0, 0, 0, 0] = 1.0


def test_binary_mask_rejects_non_binary_values():
    with pytest.raises(ParameterError):
        BinaryMask(np.full(DIMS, 2, dtype=np.uint8))


def test_gaussian_deterministic_per_rng():
    a = gaussian(DIMS, Rng(3).split("g"))
    b = gaussian(DIMS, Rng(3).split("g"))
    assert np.array_equal(a.data, b.data)
    assert a.dtype == np.float32


def test_gaussian_f32_matches_f64_draw_rounded():
    a32 = gaussian(DIMS, Rng(3).split("g"), dtype=np.float32)
    a64 = gaussian(DIMS, Rng(3).split("g"), dtype=np.float64)
    assert np.array_equal(a32.data, a64.data.astype(np.float32))


def test_stats_population_moments():
    t = gtensor((1, 2, 3, 8, 8))
    s = stats(t)
    assert s.mean == pytest.approx(float(t.data.mean()))
    assert s.variance == pytest.approx(float(t.data.var()))
    assert s.l2_norm == pytest.approx(float(np.linalg.norm(t.data)))
    assert s.channel_mean.shape == (3,)
    assert s.channel_std.shape == (3,)


def test_cosine_self_is_one_and_negation_is_minus_one():
    t = gtensor(DIMS)
    assert cosine(t, t) == pytest.approx(1.0)
    assert cosine(t, LatentTensor(-t.data)) == pytest.approx(-1.0)


def test_cosine_zero_tensor_raises():
    t = gtensor(DIMS)
    with pytest.raises(DegenerateInputError):
        cosine(t, LatentTensor(np.zeros(DIMS)))


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_cosine_bounded_and_symmetric(seed):
    a = gaussian(DIMS, Rng(seed).split("a"), dtype=np.float64)
    b = gaussian(DIMS, Rng(seed).split("b"), dtype=np.float64)
    c = cosine(a, b)
    assert -1.0 <= c <= 1.0
    assert c == cosine(b, a)


def test_adain_channel_matches_style_moments():
    content = gtensor((1, 2, 4, 8, 8), "c")
    style = LatentTensor(gtensor((1, 2, 4, 8, 8), "s").data * 3.0 + 1.5)
    out = adain(content, style)
    for ch in range(4):
        o = out.data[:, :, ch]
        s = style.data[:, :, ch]
        assert float(o.mean()) == pytest.approx(float(s.mean()), abs=1e-12)
        assert float(o.std()) == pytest.approx(float(s.std()), rel=1e-12)


def test_adain_global_matches_style_moments():
    content = gtensor(DIMS, "c")
    style = LatentTensor(gtensor(DIMS, "s").data * 0.2 - 4.0)
    out = adain(content, style, granularity="global")
    assert float(out.data.mean()) == pytest.approx(float(style.data.mean()), abs=1e-12)
    assert float(out.data.std()) == pytest.approx(float(style.data.std()), rel=1e-12)


def test_adain_is_idempotent():
    content = gtensor(DIMS, "c")
    style = gtensor(DIMS, "s")
    once = adain(content, style)
    twice = adain(once, style)
    assert np.allclose(once.data, twice.data, atol=1e-12)


def test_adain_constant_content_raises():
    style = gtensor(DIMS, "s")
    with pytest.raises(DegenerateInputError):
        adain(LatentTensor(np.ones(DIMS)), style)


def test_norm_deviation_zero_for_sqrt_d_norm():
    d = int(np.prod(DIMS))
    a = np.zeros(DIMS)
    a.flat[0] = np.sqrt(d)
    assert norm_deviation(LatentTensor(a)) == pytest.approx(0.0, abs=1e-12)


def test_norm_deviation_small_for_standard_gaussian():
    t = gtensor((1, 4, 16, 32, 32))
    d = t.size
    assert norm_deviation(t) < 3.0 * np.sqrt(d) / np.sqrt(2 * d)
