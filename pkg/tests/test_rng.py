import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparseobs.rng import StreamKey, philox4x32, split_seed, stream_normals


@pytest.mark.parametrize(
    "ctr, key, expected",
    [
        ((0, 0, 0, 0), (0, 0), (0x6627E8D5, 0xE169C58D, 0xBC57AC4C, 0x9B00DBD8)),
        ((0xFFFFFFFF,) * 4, (0xFFFFFFFF,) * 2, (0x408F276D, 0x41C83B0E, 0xA20BC7C6, 0x6D5451FD)),
        (
            (0x243F6A88, 0x85A308D3, 0x13198A2E, 0x03707344),
            (0xA4093822, 0x299F31D0),
            (0xD16CFE09, 0x94FDCCEB, 0x5001E420, 0x24126EA1),
        ),
    ],
)
def test_philox_known_answers(ctr, key, expected):
    assert tuple(int(w) for w in philox4x32(*ctr, *key)) == expected


def test_split_seed():
    assert split_seed(0x0123456789ABCDEF) == (0x89ABCDEF, 0x01234567)
    assert split_seed(-1) == (0xFFFFFFFF, 0xFFFFFFFF)


@given(
    seed=st.integers(0, 2**64 - 1),
    obs=st.integers(0, 2**31),
    particle=st.integers(0, 2**31),
)
@settings(max_examples=50, deadline=None)
def test_stream_depends_only_on_key(seed, obs, particle):
    a = StreamKey(seed, obs, particle).normals(5)
    b = stream_normals(seed, obs, [7, particle, 3], np.arange(5))[1]
    c = StreamKey(seed, obs, particle).normals(3, start=2)
    assert np.array_equal(a, b)
    assert np.array_equal(a[2:], c)
    assert np.all(np.isfinite(a))


def test_negative_index_rejected():
    with pytest.raises(ValueError):
        StreamKey(0, -1, 0)


def test_normal_moments_and_independence():
    z = stream_normals(42, 3, np.arange(50_000), np.arange(4)).reshape(-1, 2)
    n = z.shape[0]
    se = 1 / np.sqrt(n)
    assert np.all(np.abs(z.mean(axis=0)) < 4 * se)
    assert np.all(np.abs(z.var(axis=0) - 1) < 4 * np.sqrt(2 / n))
    assert abs(np.corrcoef(z[:, 0], z[:, 1])[0, 1]) < 4 * se
    # neighbouring particles and observations are uncorrelated
    a = stream_normals(42, 3, np.arange(20_000), [0])[:, 0, 0]
    b = stream_normals(42, 3, np.arange(1, 20_001), [0])[:, 0, 0]
    c = stream_normals(42, 4, np.arange(20_000), [0])[:, 0, 0]
    lim = 4 / np.sqrt(20_000)
    assert abs(np.corrcoef(a, b)[0, 1]) < lim
    assert abs(np.corrcoef(a, c)[0, 1]) < lim


def test_tail_probabilities():
    z = stream_normals(7, 0, np.arange(100_000), [0, 1]).ravel()
    # P(|Z| > 2) = 0.0455
    p = np.mean(np.abs(z) > 2)
    assert abs(p - 0.0455) < 4 * np.sqrt(0.0455 * 0.9545 / z.size)
