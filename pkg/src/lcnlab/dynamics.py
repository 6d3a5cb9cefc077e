"""Training dynamics: conserved quantities, fiber scales, and the end-to-end
parameterization's differential.

Gradient flow on a layered filter network conserves the pairwise differences
of squared layer norms.  Those invariants pin down, for a given end-to-end
filter and factor directions, the exact layer scales the flow converges to;
``recover_scales`` solves that one-dimensional polynomial problem.

The differential of the parameterization (filters -> composed filter) is
assembled column-by-column; its Gram matrix is the tangent kernel and its
rank drops exactly where factors share roots.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .poly_core import Architecture, as_filter, end_to_end
from .rootlab import cluster_roots, find_roots


def squared_norm_gaps(theta) -> np.ndarray:
    """delta_i = ||w_{i+1}||^2 - ||w_i||^2 for consecutive layers."""
    norms = np.array([np.sum(as_filter(w) ** 2) for w in theta])
    return np.diff(norms)


def balancedness_matrix(theta) -> np.ndarray:
    """All pairwise differences ||w_i||^2 - ||w_j||^2 (antisymmetric)."""
    norms = np.array([np.sum(as_filter(w) ** 2) for w in theta])
    return norms[:, None] - norms[None, :]


def stack_theta(theta) -> np.ndarray:
    return np.concatenate([as_filter(w) for w in theta])


def unstack_theta(vec, arch: Architecture) -> list:
    out, pos = [], 0
    for k in arch.ks:
        out.append(np.asarray(vec[pos : pos + k], dtype=float))
        pos += k
    if pos != len(vec):
        raise ValueError(f"parameter vector length {len(vec)} does not match {arch.ks}")
    return out


def jacobian_mu(theta, arch: Architecture) -> np.ndarray:
    """Differential of the end-to-end map, shape (filter_size, n_params).

    Column (l, j) is the composed filter with layer l replaced by the j-th
    unit filter; for unit strides this gives the familiar banded blocks built
    from the convolution of all other layers.
    """
    k = arch.filter_size
    J = np.zeros((k, sum(arch.ks)))
    col = 0
    for l in range(arch.depth):
        basis = np.zeros(arch.ks[l])
        probe = [as_filter(w) for w in theta]
        for j in range(arch.ks[l]):
            basis[:] = 0.0
            basis[j] = 1.0
            probe[l] = basis
            J[:, col], _ = end_to_end(probe, arch)
            col += 1
    return J


def ntk(theta, arch: Architecture) -> np.ndarray:
    """Tangent kernel of the parameterization: J J^T, shape (k, k)."""
    J = jacobian_mu(theta, arch)
    return J @ J.T


def mu_rank(theta, arch: Architecture, tol: float = 1e-4, seed: int = 0) -> int:
    """Rank of the differential from the root structure of the layers.

    Every projective root shared between layers costs rank: a root of total
    multiplicity M spread over the layers with per-layer maximum m contributes
    a drop of M - m.  Layers of size one carry no roots and no columns beyond
    scaling, so they are skipped.
    """
    tagged = []
    for i, w in enumerate(theta):
        w = as_filter(w)
        if len(w) == 1:
            continue
        for r in find_roots(w, seed=seed):
            tagged.append((i, r))
    clusters = cluster_roots([r for _, r in tagged], tol)
    # re-associate layer tags by identity of the ProjRoot objects
    drop = 0
    for cluster in clusters:
        ids = [id(r) for r in cluster]
        layers = [i for i, r in tagged if id(r) in ids]
        counts = np.bincount(layers)
        drop += len(cluster) - int(counts.max())
    return arch.filter_size - drop


# --- fiber scales from conserved gaps ---------------------------------------


@dataclass(frozen=True)
class FiberScales:
    """Layer rescaling consistent with conserved norm gaps.

    ``kappa_abs[i]`` is the magnitude of the factor multiplying direction
    ``q_i``; squared norms are ``beta``.  Signs are free up to an even number
    of flips; ``signed`` applies one choice.
    """

    kappa_abs: np.ndarray
    beta: np.ndarray
    residual: float

    def signed(self, pattern) -> np.ndarray:
        pattern = np.asarray(pattern, dtype=float)
        if pattern.shape != self.kappa_abs.shape or not np.all(np.abs(pattern) == 1):
            raise ValueError("sign pattern must be +-1 per layer")
        if np.prod(pattern) != 1:
            raise ValueError("sign pattern must have product +1 to fix the product")
        return self.kappa_abs * pattern


def scale_sign_patterns(depth: int) -> list:
    """All +-1 patterns with product +1 (the fiber's 2^(L-1) components)."""
    out = []
    for bits in range(2 ** (depth - 1)):
        pat = [1] * depth
        for i in range(depth - 1):
            if (bits >> i) & 1:
                pat[i] = -1
        pat[-1] = int(np.prod(pat[:-1]))  # force product +1
        out.append(tuple(pat))
    return sorted(set(out))


def recover_scales(q_filters, gaps) -> list:
    """All positive scale profiles matching the conserved norm gaps.

    Given factor directions q_i (any nonzero scaling) whose composition is the
    target end-to-end filter, find kappa_i > 0 with prod kappa_i = 1 and
    ||kappa_i q_i||^2 differences equal to ``gaps``.  Squared norms satisfy
    beta_{i+1} = beta_i + gaps_i and prod beta_i = prod ||q_i||^2, a univariate
    polynomial in beta_1; real roots making every beta_i positive survive.
    """
    q_norms_sq = np.array([np.sum(as_filter(q) ** 2) for q in q_filters])
    if np.any(q_norms_sq == 0):
        raise ValueError("factor directions must be nonzero")
    gaps = np.asarray(gaps, dtype=float)
    L = len(q_norms_sq)
    if gaps.shape != (L - 1,):
        raise ValueError(f"need {L - 1} gaps for {L} layers, got {gaps.shape}")

    offsets = np.concatenate([[0.0], np.cumsum(gaps)])
    target = float(np.prod(q_norms_sq))
    # prod_i (b + offsets_i) - target as coefficients in b
    poly = np.array([1.0])
    for off in offsets:
        poly = np.convolve(poly, [1.0, off])
    poly[-1] -= target

    solutions = []
    for root in np.roots(poly):
        if abs(root.imag) > 1e-9 * (1 + abs(root)):
            continue
        b1 = root.real
        beta = b1 + offsets
        if np.any(beta <= 0):
            continue
        kappa = np.sqrt(beta / q_norms_sq)
        residual = abs(np.prod(beta) - target)
        solutions.append(FiberScales(kappa, beta, residual))
    # dedupe near-equal roots (multiple numeric copies of the same solution)
    unique = []
    for s in solutions:
        if all(np.max(np.abs(s.beta - u.beta)) > 1e-8 * (1 + np.max(np.abs(s.beta)))
               for u in unique):
            unique.append(s)
    unique.sort(key=lambda s: s.beta[0])
    return unique


# --- flow integration --------------------------------------------------------


def integrate_flow(theta0, grad_fn, step: float, n_steps: int,
                   method: str = "rk4", record_every: int = 0):
    """Integrate theta' = -grad_fn(theta) from theta0.

    grad_fn takes and returns a list of layer filters.  ``rk4`` keeps the
    conserved gaps to integrator precision; ``euler`` matches plain gradient
    descent with learning rate ``step``.  Returns (theta_final, history)
    where history holds (step_index, theta_copy) snapshots.
    """
    theta = [as_filter(w).copy() for w in theta0]
    history = []

    def add(ws, scale, gs):
        return [w + scale * g for w, g in zip(ws, gs)]

    for t in range(n_steps):
        if record_every and t % record_every == 0:
            history.append((t, [w.copy() for w in theta]))
        if method == "euler":
            g = grad_fn(theta)
            theta = add(theta, -step, g)
        elif method == "rk4":
            k1 = [-g for g in grad_fn(theta)]
            k2 = [-g for g in grad_fn(add(theta, step / 2, k1))]
            k3 = [-g for g in grad_fn(add(theta, step / 2, k2))]
            k4 = [-g for g in grad_fn(add(theta, step, k3))]
            theta = [
                w + step / 6 * (a + 2 * b + 2 * c + d)
                for w, a, b, c, d in zip(theta, k1, k2, k3, k4)
            ]
        else:
            raise ValueError(f"unknown method {method!r}")
    if record_every:
        history.append((n_steps, [w.copy() for w in theta]))
    return theta, history
