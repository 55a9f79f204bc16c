import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from concat_ir.errors import ParameterError
from concat_ir.permute import WlpShape, index_map, permute_round, split_blocks, wlp_apply, wlp_inverse

from oracles import transpose_list


def test_two_by_three():
    v = np.array(list("abcdef"))
    assert "".join(wlp_apply(v, WlpShape(2, 3))) == "adbecf"
    assert "".join(wlp_inverse(wlp_apply(v, WlpShape(2, 3)), WlpShape(2, 3))) == "abcdef"


def test_single_row_is_identity():
    v = np.arange(9)
    assert np.array_equal(wlp_apply(v, WlpShape(1, 9)), v)


def test_explicit_index_mapping():
    m, n = 4, 15
    out = wlp_apply(np.arange(m * n), WlpShape(m, n))
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            assert out[(j - 1) * m + (i - 1)] == (i - 1) * n + (j - 1)


def test_square_shape_is_an_involution():
    v = np.random.default_rng(0).integers(0, 2, 225)
    s = WlpShape(15, 15)
    assert np.array_equal(wlp_inverse(v, s), wlp_apply(v, s))
    assert np.array_equal(wlp_apply(wlp_apply(v, s), s), v)


def test_roundtrip_165_bits():
    v = np.random.default_rng(1).integers(0, 2, 165)
    assert np.array_equal(wlp_inverse(wlp_apply(v, WlpShape(11, 15)), WlpShape(11, 15)), v)
    assert np.array_equal(wlp_apply(wlp_apply(v, WlpShape(11, 15)), WlpShape(15, 11)), v)


@given(st.integers(1, 40), st.integers(1, 40), st.data())
def test_matches_list_transpose_and_roundtrips(m, n, data):
    v = data.draw(st.lists(st.integers(0, 1), min_size=m * n, max_size=m * n))
    out = wlp_apply(np.array(v), WlpShape(m, n))
    assert out.tolist() == transpose_list(v, m, n)
    assert wlp_inverse(out, WlpShape(m, n)).tolist() == v


@given(st.integers(1, 50), st.integers(1, 50))
def test_index_map_is_a_permutation(m, n):
    assert sorted(index_map(WlpShape(m, n)).tolist()) == list(range(m * n))


@given(st.integers(1, 20), st.integers(15, 60))
def test_dispersion(n, m):
    # with m >= n every input block spreads over n distinct output blocks
    m = max(m, n)
    out = index_map(WlpShape(m, n))
    where = np.empty(m * n, dtype=int)
    where[out] = np.arange(m * n) // n  # output block of each input index
    for i in range(m):
        assert len(set(where[i * n:(i + 1) * n])) == n


def test_length_mismatch():
    with pytest.raises(ParameterError):
        wlp_apply(np.zeros(7), WlpShape(2, 3))
    with pytest.raises(ParameterError):
        WlpShape(0, 3)


def test_ragged_remainder_is_carried():
    v = np.arange(15 * 16 + 7)
    blocks, rest = permute_round(v, 15)
    assert blocks.shape == (16, 15)
    assert rest.tolist() == list(range(240, 247))
    assert np.array_equal(blocks.reshape(-1), wlp_apply(v[:240], WlpShape(16, 15)))
    b, r = split_blocks(v, 15)
    assert b.shape == (16, 15) and r.size == 7
