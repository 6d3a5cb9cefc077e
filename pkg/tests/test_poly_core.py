import numpy as np
import pytest

from lcnlab.poly_core import (
    Architecture,
    apply_conv_tensor,
    as_filter,
    circulant_matrix,
    compose_filters,
    compose_tensor_filters,
    end_to_end,
    materialize_conv_tensor,
    network_matrices,
    network_poly,
    pi,
    pi_s,
    toeplitz_matrix,
    upsample,
)


def random_arch(rng, max_depth=4, max_k=5, max_stride=3):
    depth = int(rng.integers(1, max_depth + 1))
    ks = tuple(int(rng.integers(1, max_k + 1)) for _ in range(depth))
    strides = tuple(int(rng.integers(1, max_stride + 1)) for _ in range(depth))
    return Architecture(ks, strides)


def test_architecture_basics():
    arch = Architecture((3, 2), (2, 1))
    assert arch.depth == 2
    assert arch.filter_size == 5
    assert arch.stride == 2
    assert arch.bin_sizes == (2, 1)
    assert arch.layer_dims(9) == (9, 4, 3)


def test_architecture_defaults_to_unit_strides():
    arch = Architecture((2, 2, 2))
    assert arch.strides == (1, 1, 1)
    assert arch.filter_size == 4
    assert arch.stride == 1


def test_architecture_rejects_bad_input():
    with pytest.raises(ValueError):
        Architecture((3, 0))
    with pytest.raises(ValueError):
        Architecture((3, 2), (2,))
    arch = Architecture((3, 2), (2, 1))
    with pytest.raises(ValueError):
        arch.layer_dims(8)  # (8 - 3) not divisible by 2


def test_min_input_size_round_trips():
    rng = np.random.default_rng(7)
    for _ in range(50):
        arch = random_arch(rng)
        d0 = arch.min_input_size()
        assert arch.layer_dims(d0)[-1] == 1


def test_compose_worked_example():
    # stride-2 composition of (a, b, c) then (d, e)
    a, b, c, d, e = 2.0, 3.0, 5.0, 7.0, 11.0
    out = compose_filters([d, e], 2, [a, b, c])
    expected = [a * d, b * d, a * e + c * d, b * e, c * e]
    assert np.allclose(out, expected)


def test_upsample_places_entries_stride_apart():
    assert np.array_equal(upsample([3.0, 4.0], 2), [3.0, 0.0, 4.0])
    assert np.array_equal(upsample([1.0, 1.0], 3), [1.0, 0.0, 0.0, 1.0])
    assert np.array_equal(upsample([5.0], 4), [5.0])


def test_end_to_end_size_and_stride():
    arch = Architecture((3, 2), (2, 1))
    theta = [np.array([1.0, 2.0, 3.0]), np.array([4.0, 5.0])]
    w, stride = end_to_end(theta, arch)
    assert len(w) == 5 == arch.filter_size
    assert stride == 2 == arch.stride


def test_pi_is_identity_on_coefficients():
    w = np.array([1.0, -2.0, 0.5])
    assert np.array_equal(pi(w), w)
    assert np.array_equal(pi_s(w, 1), w)


def test_pi_multiplicative_on_random_networks():
    rng = np.random.default_rng(123)
    for _ in range(200):
        arch = random_arch(rng)
        theta = arch.random_theta(rng)
        w, _ = end_to_end(theta, arch)
        prod = network_poly(theta, arch)
        assert np.allclose(pi(w), prod, atol=1e-10 * max(1.0, np.max(np.abs(prod))))


def test_toeplitz_entries():
    T = toeplitz_matrix([1.0, 2.0], 3, stride=1)
    assert np.array_equal(T, [[1.0, 2.0, 0.0], [0.0, 1.0, 2.0]])
    T2 = toeplitz_matrix([1.0, 2.0, 3.0], 5, stride=2)
    assert np.array_equal(T2, [[1.0, 2.0, 3.0, 0.0, 0.0], [0.0, 0.0, 1.0, 2.0, 3.0]])


def test_toeplitz_requires_divisible_size():
    with pytest.raises(ValueError):
        toeplitz_matrix([1.0, 2.0, 3.0], 6, stride=2)


def test_circulant_rows_shift_by_stride():
    a, b = 2.0, 7.0
    C = circulant_matrix([a, b], 3, stride=1)
    assert np.array_equal(C, [[a, b, 0.0], [0.0, a, b], [b, 0.0, a]])
    C2 = circulant_matrix([a, b], 4, stride=2)
    assert np.array_equal(C2, [[a, b, 0, 0], [0, 0, a, b]])


def test_circulant_wraps_filter():
    C = circulant_matrix([1.0, 2.0, 3.0], 4, stride=2)
    assert np.array_equal(C, [[1.0, 2.0, 3.0, 0.0], [3.0, 0.0, 1.0, 2.0]])


def test_toeplitz_is_corner_of_circulant():
    rng = np.random.default_rng(5)
    for _ in range(100):
        k = int(rng.integers(1, 6))
        s = int(rng.integers(1, 4))
        d_out = int(rng.integers(1, 5))
        d_in = (d_out - 1) * s + k
        w = rng.standard_normal(k)
        T = toeplitz_matrix(w, d_in, s)
        d_round = d_in + (-d_in) % s  # circulant needs a stride-divisible size
        C = circulant_matrix(w, d_round, s)
        assert np.allclose(T, C[: T.shape[0], : T.shape[1]])


def test_matrix_product_matches_composed_filter():
    rng = np.random.default_rng(11)
    for _ in range(200):
        arch = random_arch(rng, max_depth=3)
        theta = arch.random_theta(rng)
        d0 = arch.min_input_size(d_out=int(rng.integers(1, 4)))
        mats = network_matrices(theta, arch, d0)
        prod = np.eye(d0)
        for M in mats:
            prod = M @ prod
        w, stride = end_to_end(theta, arch)
        assert np.allclose(prod, toeplitz_matrix(w, d0, stride), atol=1e-10)


def test_circulant_product_is_circulant_of_composition():
    rng = np.random.default_rng(13)
    for _ in range(100):
        k1, k2 = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        s1, s2 = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        w1, w2 = rng.standard_normal(k1), rng.standard_normal(k2)
        u = compose_filters(w2, s1, w1)
        d0 = s1 * s2 * int(rng.integers(1, 4)) + len(u) - 1
        d0 += (-d0) % (s1 * s2)
        if len(u) > d0:
            continue
        lhs = circulant_matrix(w2, d0 // s1, s2) @ circulant_matrix(w1, d0, s1)
        rhs = circulant_matrix(u, d0, s1 * s2)
        assert np.allclose(lhs, rhs, atol=1e-10)


def test_filter_application_is_cross_correlation():
    x = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
    T = toeplitz_matrix([1.0, -1.0], 5, stride=1)
    assert np.allclose(T @ x, x[:-1] - x[1:])


# ---- multi-dimensional filters ----


def test_tensor_slices_match_hand_example():
    w = np.array([[1.0, 2.0], [3.0, 4.0]])
    T = materialize_conv_tensor(w, (3, 2))  # output shape (2, 1)
    assert np.array_equal(T[0, 0], [[1.0, 2.0], [3.0, 4.0], [0.0, 0.0]])
    assert np.array_equal(T[1, 0], [[0.0, 0.0], [1.0, 2.0], [3.0, 4.0]])


def test_tensor_composition_matches_matrix_composition():
    rng = np.random.default_rng(17)
    for _ in range(30):
        shape1 = tuple(int(rng.integers(1, 4)) for _ in range(2))
        shape2 = tuple(int(rng.integers(1, 4)) for _ in range(2))
        w1 = rng.standard_normal(shape1)
        w2 = rng.standard_normal(shape2)
        u = compose_tensor_filters(w2, w1)
        assert u.shape == tuple(a + b - 1 for a, b in zip(shape1, shape2))
        in_shape = tuple(u.shape[i] + int(rng.integers(0, 3)) for i in range(2))
        x = rng.standard_normal(in_shape)
        direct = apply_conv_tensor(u, x)
        staged = apply_conv_tensor(w2, apply_conv_tensor(w1, x))
        assert np.allclose(direct, staged, atol=1e-10)


def test_materialized_tensor_contracts_like_application():
    rng = np.random.default_rng(19)
    w = rng.standard_normal((2, 3))
    x = rng.standard_normal((4, 5))
    T = materialize_conv_tensor(w, x.shape)
    out = np.tensordot(T, x, axes=([2, 3], [0, 1]))
    assert np.allclose(out, apply_conv_tensor(w, x), atol=1e-12)


def test_as_filter_validates():
    with pytest.raises(ValueError):
        as_filter(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        as_filter([])
