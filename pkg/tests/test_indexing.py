import numpy as np
import pytest
from hypothesis import given, strategies as st

from netac.indexing import MixedRadixIndex, mixed_radix_decode, mixed_radix_encode


def test_little_endian_order():
    idx = MixedRadixIndex([2, 3])
    assert [idx.decode(k) for k in range(6)] == [(0, 0), (1, 0), (0, 1), (1, 1), (0, 2), (1, 2)]
    assert idx.encode((1, 2)) == 5
    assert idx.size == 6


def test_all_coords_matches_decode():
    idx = MixedRadixIndex([3, 1, 2])
    coords = idx.all_coords()
    assert coords.shape == (6, 3)
    for k, row in enumerate(coords):
        assert tuple(row) == idx.decode(k)
    np.testing.assert_array_equal(idx.encode_array(coords), np.arange(6))


def test_out_of_range():
    idx = MixedRadixIndex([2, 2])
    with pytest.raises(ValueError):
        idx.encode((2, 0))
    with pytest.raises(ValueError):
        idx.decode(4)


@given(st.lists(st.integers(1, 5), min_size=1, max_size=5), st.data())
def test_roundtrip(radices, data):
    size = int(np.prod(radices))
    k = data.draw(st.integers(0, size - 1))
    assert mixed_radix_encode(radices, mixed_radix_decode(radices, k)) == k


def test_full_enumeration_counts():
    assert MixedRadixIndex([6, 6, 6]).size == 216
    idx = MixedRadixIndex([2, 3, 2])
    assert [idx.encode(idx.decode(k)) for k in range(12)] == list(range(12))
