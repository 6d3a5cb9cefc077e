"""Filters, architectures, and their matrix / polynomial / tensor realizations.

A layer with filter size k and stride s maps a length-d signal to length
(d - k)/s + 1 by sliding inner products.  Everything downstream identifies a
filter (w_0, ..., w_{k-1}) with the homogeneous binary form

    w_0 x^{k-1} + w_1 x^{k-2} y + ... + w_{k-1} y^{k-1},

i.e. the stored coefficient at index j multiplies x^{k-1-j} y^j.  Composition
of layers then becomes polynomial multiplication (with a power substitution
when strides are involved), which is what makes the sparse matrix algebra
tractable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np


def as_filter(w) -> np.ndarray:
    """Coerce to a 1-D float array (the canonical filter representation)."""
    arr = np.asarray(w, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"filter must be a nonempty 1-D array, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class Architecture:
    """Filter sizes and strides of a stack of convolutional layers.

    ``ks[i]`` is the filter size of layer i (applied first-to-last) and
    ``strides[i]`` its stride.  Strides default to all ones.
    """

    ks: tuple
    strides: tuple = None  # type: ignore[assignment]

    def __post_init__(self):
        ks = tuple(int(k) for k in self.ks)
        if not ks or any(k < 1 for k in ks):
            raise ValueError(f"filter sizes must be positive integers, got {self.ks}")
        strides = self.strides
        if strides is None:
            strides = (1,) * len(ks)
        strides = tuple(int(s) for s in strides)
        if len(strides) != len(ks) or any(s < 1 for s in strides):
            raise ValueError(f"bad strides {self.strides} for filter sizes {ks}")
        object.__setattr__(self, "ks", ks)
        object.__setattr__(self, "strides", strides)

    @property
    def depth(self) -> int:
        return len(self.ks)

    @property
    def filter_size(self) -> int:
        """Size of the end-to-end filter of the composed network."""
        k, span = self.ks[0], 1
        for i in range(1, len(self.ks)):
            span *= self.strides[i - 1]
            k += (self.ks[i] - 1) * span
        return k

    @property
    def stride(self) -> int:
        """Stride of the end-to-end filter (product of layer strides)."""
        out = 1
        for s in self.strides:
            out *= s
        return out

    @property
    def bin_sizes(self) -> tuple:
        """Degrees k_i - 1 of the per-layer filter polynomials."""
        return tuple(k - 1 for k in self.ks)

    @property
    def n_even(self) -> int:
        """Number of layers with even filter size (odd polynomial degree)."""
        return sum(1 for k in self.ks if k % 2 == 0)

    @property
    def is_stride_one(self) -> bool:
        return all(s == 1 for s in self.strides)

    def layer_dims(self, d0: int) -> tuple:
        """Signal lengths (d_0, d_1, ..., d_L) for input length d0.

        Raises ValueError when some layer does not divide evenly.
        """
        dims = [int(d0)]
        for k, s in zip(self.ks, self.strides):
            num = dims[-1] - k
            if num < 0 or num % s != 0:
                raise ValueError(
                    f"input length {d0} incompatible with sizes {self.ks} strides {self.strides}"
                )
            dims.append(num // s + 1)
        return tuple(dims)

    def min_input_size(self, d_out: int = 1) -> int:
        """Smallest input length producing output length ``d_out``."""
        d = int(d_out)
        for k, s in zip(reversed(self.ks), reversed(self.strides)):
            d = (d - 1) * s + k
        return d

    def random_theta(self, rng: np.random.Generator) -> list:
        """Independent standard-normal filters, drawn layer by layer."""
        return [rng.standard_normal(k) for k in self.ks]


def upsample(w, stride: int) -> np.ndarray:
    """Insert ``stride - 1`` zeros between consecutive filter entries."""
    w = as_filter(w)
    if stride == 1:
        return w.copy()
    out = np.zeros((len(w) - 1) * stride + 1)
    out[::stride] = w
    return out


def compose_filters(outer, stride: int, inner) -> np.ndarray:
    """Filter of (outer layer) ∘ (inner map of the given stride).

    The composed entry u_m = sum over j*stride + l = m of outer_j * inner_l,
    of size (len(outer)-1)*stride + len(inner).
    """
    return np.convolve(upsample(outer, stride), as_filter(inner))


def end_to_end(theta, arch: Architecture):
    """End-to-end filter and stride of the full network.

    ``theta`` is the list of per-layer filters, first layer first.
    """
    if len(theta) != arch.depth:
        raise ValueError(f"expected {arch.depth} filters, got {len(theta)}")
    for w, k in zip(theta, arch.ks):
        if len(as_filter(w)) != k:
            raise ValueError(f"filter sizes {_sizes(theta)} do not match {arch.ks}")
    u = as_filter(theta[0]).copy()  # never alias caller memory
    span = arch.strides[0]
    for i in range(1, arch.depth):
        u = compose_filters(theta[i], span, u)
        span *= arch.strides[i]
    return u, span


def _sizes(theta):
    return tuple(len(np.atleast_1d(w)) for w in theta)


def pi(w) -> np.ndarray:
    """Coefficients of the homogeneous form attached to a filter (a copy)."""
    return as_filter(w).copy()


def pi_s(w, stride: int) -> np.ndarray:
    """Coefficients of the stride-lifted form: entry j moves to index j*stride.

    The resulting vector has length (k-1)*stride + 1 and represents
    w_0 x^{(k-1)s} + w_1 x^{(k-2)s} y^s + ... + w_{k-1} y^{(k-1)s}.
    """
    return upsample(w, stride)


def poly_mul(p, q) -> np.ndarray:
    """Product of two coefficient vectors (full convolution)."""
    return np.convolve(as_filter(p), as_filter(q))


def network_poly(theta, arch: Architecture) -> np.ndarray:
    """Product of the stride-lifted layer polynomials.

    Equals ``pi(end_to_end(theta, arch)[0])`` — the multiplicativity that the
    matrix algebra below realizes.
    """
    p = pi(theta[0])
    span = arch.strides[0]
    for i in range(1, arch.depth):
        p = poly_mul(pi_s(theta[i], span), p)
        span *= arch.strides[i]
    return p


def toeplitz_matrix(w, d_in: int, stride: int = 1) -> np.ndarray:
    """Sliding-window matrix of a filter: entry (i, j) = w[j - i*stride].

    Shape is (d_out, d_in) with d_out = (d_in - k)/stride + 1; raises when the
    division is not exact.
    """
    w = as_filter(w)
    k = len(w)
    num = d_in - k
    if num < 0 or num % stride != 0:
        raise ValueError(f"d_in={d_in} incompatible with k={k}, stride={stride}")
    d_out = num // stride + 1
    T = np.zeros((d_out, d_in))
    for i in range(d_out):
        T[i, i * stride : i * stride + k] = w
    return T


def circulant_matrix(w, d: int, stride: int = 1) -> np.ndarray:
    """Cyclic version of the filter matrix, (d/stride) x d: row r holds the
    filter starting at column (r*stride) mod d."""
    w = as_filter(w)
    k = len(w)
    if k > d:
        raise ValueError(f"filter size {k} exceeds circulant dimension {d}")
    if d % stride != 0:
        raise ValueError(f"stride {stride} must divide the cyclic dimension {d}")
    C = np.zeros((d // stride, d))
    for r in range(d // stride):
        for j in range(k):
            C[r, (r * stride + j) % d] += w[j]
    return C


def network_matrices(theta, arch: Architecture, d0: int) -> list:
    """Per-layer sliding-window matrices for input length d0 (first layer first)."""
    dims = arch.layer_dims(d0)
    return [
        toeplitz_matrix(w, dims[i], arch.strides[i]) for i, w in enumerate(theta)
    ]


# --- multi-dimensional (stride-one) filters -------------------------------
#
# A D-dimensional filter is an array of shape (k^1, ..., k^D); the associated
# linear map takes inputs of shape (d^1, ..., d^D) to outputs of shape
# (d^a - k^a + 1).  Composition is full D-dimensional convolution of the
# filter arrays, and the multi-homogeneous coefficient array of a composed
# filter is the array product (convolution) of the layer coefficient arrays.


def compose_tensor_filters(outer: np.ndarray, inner: np.ndarray) -> np.ndarray:
    """Full D-dimensional convolution: u_m = sum_{j+l=m} outer_j * inner_l."""
    outer = np.asarray(outer, dtype=float)
    inner = np.asarray(inner, dtype=float)
    if outer.ndim != inner.ndim:
        raise ValueError("filters must share the number of axes")
    out = np.zeros(tuple(a + b - 1 for a, b in zip(outer.shape, inner.shape)))
    for idx in np.ndindex(outer.shape):
        window = tuple(slice(i, i + n) for i, n in zip(idx, inner.shape))
        out[window] += outer[idx] * inner
    return out


def pi_tensor(w: np.ndarray) -> np.ndarray:
    """Multi-homogeneous coefficient array of a D-dimensional filter.

    Index (i_1, ..., i_D) carries x_a^{k^a-1-i_a} y_a^{i_a} on each axis, the
    same descending convention as the 1-D map, so this is a copy; products of
    these arrays (tensor convolution) match composed filters.
    """
    return np.asarray(w, dtype=float).copy()


def materialize_conv_tensor(w: np.ndarray, in_shape) -> np.ndarray:
    """Dense tensor of the linear map: T[i..., j...] = w[j - i] (stride one).

    Output shape is out_shape + in_shape where out_shape = in_shape - k + 1.
    """
    w = np.asarray(w, dtype=float)
    in_shape = tuple(int(d) for d in in_shape)
    out_shape = tuple(d - k + 1 for d, k in zip(in_shape, w.shape))
    if any(d < 1 for d in out_shape):
        raise ValueError(f"input shape {in_shape} too small for filter {w.shape}")
    T = np.zeros(out_shape + in_shape)
    for i in np.ndindex(out_shape):
        window = tuple(slice(a, a + n) for a, n in zip(i, w.shape))
        T[i][window] = w
    return T


def apply_conv_tensor(w: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Apply the D-dimensional sliding-window map directly (cross-correlation)."""
    w = np.asarray(w, dtype=float)
    x = np.asarray(x, dtype=float)
    out_shape = tuple(d - k + 1 for d, k in zip(x.shape, w.shape))
    out = np.zeros(out_shape)
    for i in np.ndindex(out_shape):
        window = tuple(slice(a, a + n) for a, n in zip(i, w.shape))
        out[i] = float(np.sum(w * x[window]))
    return out
