"""Tensor kernel tests: validation, deterministic matmul, argmax."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from statekit.errors import ConfigError, DimensionError
from statekit.tensor import (MAX_RANK, _matmul_seq, argmax_last, check_tensor,
                             deterministic_mode, matmul, reshape, tensor)


def test_matmul_known_product():
    a = tensor([[1, 2], [3, 4]], dtype=np.float64)
    b = tensor([[5, 6], [7, 8]], dtype=np.float64)
    assert np.array_equal(matmul(a, b), [[19.0, 22.0], [43.0, 50.0]])


def test_matmul_identity_is_exact():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(5, 5)).astype(np.float32)
    eye = np.eye(5, dtype=np.float32)
    assert np.array_equal(matmul(a, eye), a)


def test_matmul_inner_extent_mismatch_names_shapes():
    a = np.zeros((2, 3), dtype=np.float32)
    b = np.zeros((4, 2), dtype=np.float32)
    with pytest.raises(DimensionError, match=r"2, 3.*4, 2"):
        matmul(a, b)


def test_matmul_rejects_rank_and_dtype_mismatch():
    with pytest.raises(DimensionError):
        matmul(np.zeros((2, 2, 2), dtype=np.float32), np.zeros((2, 2), dtype=np.float32))
    with pytest.raises(DimensionError):
        matmul(np.zeros((2, 2), dtype=np.float32), np.zeros((2, 2), dtype=np.float64))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(1, 17), st.integers(1, 6),
       st.sampled_from([np.float32, np.float64]), st.integers(0, 2**31 - 1))
def test_matmul_deterministic_matches_sequential_loop(m, k, n, dtype, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(m, k)).astype(dtype)
    b = rng.normal(size=(k, n)).astype(dtype)
    with deterministic_mode(True):
        got = matmul(a, b)
    assert got.dtype == np.dtype(dtype)
    assert np.array_equal(got, _matmul_seq(a, b))


def test_matmul_deterministic_handles_transposed_views():
    rng = np.random.default_rng(9)
    a = rng.normal(size=(13, 7)).astype(np.float32)
    b = rng.normal(size=(5, 7)).astype(np.float32)
    with deterministic_mode(True):
        got = matmul(a.T.copy().T, b.T)
        assert np.array_equal(got, _matmul_seq(a, np.ascontiguousarray(b.T)))


def test_matmul_throughput_mode_close_to_deterministic():
    rng = np.random.default_rng(11)
    a = rng.normal(size=(16, 40)).astype(np.float32)
    b = rng.normal(size=(40, 8)).astype(np.float32)
    with deterministic_mode(True):
        exact = matmul(a, b)
    with deterministic_mode(False):
        fast = matmul(a, b)
    np.testing.assert_allclose(fast, exact, rtol=1e-5, atol=1e-5)


def test_check_tensor_rank_and_dtype_rules():
    check_tensor(np.zeros((2, 2, 2, 2), dtype=np.float32))
    with pytest.raises(DimensionError):
        check_tensor(np.zeros((2,) * (MAX_RANK + 1), dtype=np.float32))
    with pytest.raises(ConfigError):
        check_tensor(np.zeros((3,), dtype=np.int32))
    with pytest.raises(DimensionError):
        check_tensor(np.zeros((0, 2), dtype=np.float32))
    with pytest.raises(DimensionError):
        check_tensor(np.float32(1.0))


def test_tensor_constructor_casts_and_shapes():
    t = tensor([1, 2, 3, 4], dtype=np.float64, shape=(2, 2))
    assert t.dtype == np.float64 and t.shape == (2, 2)


def test_reshape_rejects_size_change():
    t = tensor([1, 2, 3, 4])
    assert reshape(t, (4, 1)).shape == (4, 1)
    with pytest.raises(DimensionError):
        reshape(t, (3, 2))


def test_argmax_last_first_index_ties():
    assert argmax_last(tensor([1.0, 3.0, 3.0])) == 1
    got = argmax_last(tensor([[0.0, 0.0], [2.0, 1.0]]))
    assert np.array_equal(got, [0, 0])
