"""Quadratic losses on filter space, their gradients through the layers, and
gradient-descent experiment drivers.

A square regression loss on the network's input/output matrices collapses to
a quadratic form on the end-to-end filter: the data covariance folds along
the filter's sliding placements (``tau``).  Training operates directly on
the layer filters; gradients flow through the composition either via
cross-correlation with the product of the other layers (unit strides, fast)
or via the full differential (any strides).

The experiment drivers reproduce two studies: the distribution of root
patterns reached by gradient descent from random data, and the number of
distinct minima under the Euclidean versus the derivative-weighted
(Bombieri) metric.
"""

from __future__ import annotations

import math
import multiprocessing
from dataclasses import dataclass, field

import numpy as np

from .dynamics import jacobian_mu
from .funcspace import SpaceRegion, region_of_rrmp
from .poly_core import Architecture, as_filter, end_to_end, toeplitz_matrix
from .rootlab import ROOT_TOL, Rrmp, classify_rrmp, classify_rrmp_pooled


def unconstrained_opt(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Least-squares optimum over unstructured matrices: Y X^T (X X^T)^{-1}."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    return Y @ X.T @ np.linalg.inv(X @ X.T)


def tau(M: np.ndarray, k: int, n_out: int, stride: int = 1,
        circulant: bool = False) -> np.ndarray:
    """Fold a d0 x d0 matrix along the filter's placements.

    Entry (i, j) sums M[i + s*m, j + s*m] over the n_out output positions
    (cyclically in circulant mode), so that the induced quadratic form on
    filters w satisfies w^T tau(M) w = sum_m (row_m M row_m^T) for the
    sliding-window matrix with rows row_m = filter placed at offset s*m.
    """
    M = np.asarray(M, dtype=float)
    d0 = M.shape[0]
    if M.shape != (d0, d0):
        raise ValueError("need a square matrix")
    out = np.zeros((k, k))
    for m in range(n_out):
        idx = (np.arange(k) + stride * m)
        if circulant:
            idx = idx % d0
        elif idx[-1] >= d0:
            raise ValueError(
                f"placement {m} overruns dimension {d0} (k={k}, stride={stride})"
            )
        out += M[np.ix_(idx, idx)]
    return out


def bombieri_weights(k: int) -> np.ndarray:
    """Reciprocal binomial weights j!(k-1-j)!/(k-1)! for coefficients 0..k-1."""
    n = k - 1
    return np.array([1.0 / math.comb(n, j) for j in range(k)])


def bombieri_matrix(k: int) -> np.ndarray:
    return np.diag(bombieri_weights(k))


@dataclass(frozen=True)
class QuadraticObjective:
    """loss(w) = (w - target)^T matrix (w - target) + const."""

    matrix: np.ndarray
    target: np.ndarray
    const: float = 0.0

    def __post_init__(self):
        M = np.asarray(self.matrix, dtype=float)
        u = as_filter(self.target)
        if M.shape != (len(u), len(u)):
            raise ValueError(f"matrix shape {M.shape} does not match target {len(u)}")
        object.__setattr__(self, "matrix", M)
        object.__setattr__(self, "target", u)

    @property
    def k(self) -> int:
        return len(self.target)

    def value(self, w) -> float:
        r = as_filter(w) - self.target
        return float(r @ self.matrix @ r) + self.const

    def grad(self, w) -> np.ndarray:
        r = as_filter(w) - self.target
        return 2.0 * (self.matrix @ r)

    @staticmethod
    def euclidean(target) -> "QuadraticObjective":
        u = as_filter(target)
        return QuadraticObjective(np.eye(len(u)), u)

    @staticmethod
    def bombieri(target) -> "QuadraticObjective":
        u = as_filter(target)
        return QuadraticObjective(bombieri_matrix(len(u)), u)

    @staticmethod
    def from_data(X, Y, arch: Architecture, circulant: bool = False
                  ) -> "QuadraticObjective":
        """Exact quadratic form of ||W X - Y||_F^2 over the architecture's
        sliding-window matrices W, including the constant term."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        d0 = X.shape[0]
        k, s = arch.filter_size, arch.stride
        if circulant:
            if d0 % s:
                raise ValueError("cyclic mode needs stride-divisible input size")
            n_out = d0 // s
        else:
            n_out = (d0 - k) // s + 1
            if (d0 - k) % s:
                raise ValueError(f"input size {d0} incompatible with k={k}, s={s}")
        if Y.shape != (n_out, X.shape[1]):
            raise ValueError(f"output data must be {n_out} x {X.shape[1]}")

        Sigma = X @ X.T
        M = tau(Sigma, k, n_out, s, circulant)
        XY = X @ Y.T  # (d0, n_out)
        v = np.zeros(k)
        for m in range(n_out):
            idx = np.arange(k) + s * m
            if circulant:
                idx = idx % d0
            v += XY[idx, m]
        u = np.linalg.solve(M, v)
        const = float(np.sum(Y * Y) - u @ M @ u)
        return QuadraticObjective(M, u, const)


def network_loss(theta, arch: Architecture, obj: QuadraticObjective) -> float:
    w, _ = end_to_end(theta, arch)
    return obj.value(w)


def loss_and_gradient(theta, arch: Architecture, obj: QuadraticObjective):
    """(loss, per-layer gradients) sharing a single composition pass.

    With unit strides, the gradient of layer i is the cross-correlation of the
    loss gradient with the composition of all other layers; general strides
    fall back to the transposed differential.
    """
    if arch.is_stride_one:
        filters = [as_filter(f) for f in theta]
        prefix = [np.array([1.0])]
        for f in filters[:-1]:
            prefix.append(np.convolve(prefix[-1], f))
        suffix = [np.array([1.0])]
        for f in reversed(filters[1:]):
            suffix.append(np.convolve(suffix[-1], f))
        suffix.reverse()
        w = np.convolve(prefix[-1], filters[-1])
        g = obj.grad(w)
        grads = []
        for i in range(arch.depth):
            other = np.convolve(prefix[i], suffix[i])
            grads.append(np.correlate(g, other, mode="valid"))
        return obj.value(w), grads
    w, _ = end_to_end(theta, arch)
    g = obj.grad(w)
    J = jacobian_mu(theta, arch)
    flat = J.T @ g
    grads, pos = [], 0
    for k in arch.ks:
        grads.append(flat[pos : pos + k])
        pos += k
    return obj.value(w), grads


def network_gradient(theta, arch: Architecture, obj: QuadraticObjective) -> list:
    """Per-layer gradients of obj(end_to_end(theta))."""
    return loss_and_gradient(theta, arch, obj)[1]


def gradient_via_matrices(theta, arch: Architecture, X, Y) -> list:
    """Same gradient, computed through the sliding-window matrices.

    Uses the chain rule on ||W_L ... W_1 X - Y||_F^2 with explicit matrix
    products, then sums each matrix gradient along its filter's placements.
    Serves as an independent check of ``network_gradient``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    d0 = X.shape[0]
    mats = []
    dims = arch.layer_dims(d0)
    for i, w in enumerate(theta):
        mats.append(toeplitz_matrix(w, dims[i], arch.strides[i]))

    grads = []
    for l in range(arch.depth):
        before = np.eye(d0)
        for M in mats[:l]:
            before = M @ before
        after = np.eye(dims[l + 1])
        for M in mats[l + 1 :]:
            after = M @ after
        full = after @ mats[l] @ before
        dL = 2.0 * (full @ X @ X.T - Y @ X.T)  # gradient wrt the full matrix
        Gmat = after.T @ dL @ before.T  # gradient wrt layer-l matrix
        k, s = arch.ks[l], arch.strides[l]
        g = np.zeros(k)
        for m in range(Gmat.shape[0]):
            g += Gmat[m, s * m : s * m + k]
        grads.append(g)
    return grads


# --- gradient descent --------------------------------------------------------


@dataclass(frozen=True)
class TrainConfig:
    step: float = 0.01
    max_steps: int = 15000
    grad_sq_tol: float = 1e-14
    diverge_loss: float = 1e12


@dataclass
class TrainRun:
    theta: list
    w: np.ndarray
    loss: float
    grad_sq: float
    steps: int
    converged: bool
    diverged: bool
    solution_rrmp: Rrmp = None
    target_rrmp: Rrmp = None
    init_rrmp: Rrmp = None
    loss_history: np.ndarray = None


def _pooled_or_none(filters, tol):
    try:
        return classify_rrmp_pooled(filters, tol=tol)
    except Exception:
        return None


def gd_train(obj: QuadraticObjective, arch: Architecture, theta0,
             config: TrainConfig = TrainConfig(), classify_tol: float = ROOT_TOL,
             record_history: bool = False) -> TrainRun:
    """Plain gradient descent on obj(end_to_end(theta)).

    Stops when the squared gradient norm drops below the tolerance; flags
    divergence when the loss explodes or turns non-finite.  The returned run
    carries pooled root-pattern classifications of the initialization and the
    final point (None where a zero filter makes them undefined).
    """
    theta = [as_filter(w).copy() for w in theta0]
    init_rrmp = _pooled_or_none(theta, classify_tol)
    history = [] if record_history else None
    loss = np.inf
    grad_sq = np.inf
    converged = diverged = False
    steps = 0
    for steps in range(config.max_steps + 1):
        loss, grads = loss_and_gradient(theta, arch, obj)
        if record_history:
            history.append(loss)
        if not np.isfinite(loss) or loss > config.diverge_loss:
            diverged = True
            break
        grad_sq = float(sum(np.sum(g * g) for g in grads))
        if grad_sq <= config.grad_sq_tol:
            converged = True
            break
        if steps == config.max_steps:
            break
        theta = [w - config.step * g for w, g in zip(theta, grads)]

    w, _ = end_to_end(theta, arch)
    run = TrainRun(
        theta=theta,
        w=w,
        loss=float(loss),
        grad_sq=grad_sq,
        steps=steps,
        converged=converged,
        diverged=diverged,
        init_rrmp=init_rrmp,
        target_rrmp=_rrmp_or_none(obj.target, classify_tol),
        solution_rrmp=_pooled_or_none(theta, classify_tol),
        loss_history=np.array(history) if record_history else None,
    )
    return run


def _rrmp_or_none(w, tol):
    try:
        return classify_rrmp(w, tol=tol)
    except Exception:
        return None


# --- experiment drivers ------------------------------------------------------


@dataclass
class PatternCell:
    """One (target, init, solution) cell of the pattern table."""

    count: int = 0
    loss_sum: float = 0.0

    @property
    def mean_loss(self) -> float:
        return self.loss_sum / self.count if self.count else float("nan")


@dataclass
class PatternTable:
    """Aggregated gradient-descent outcomes for one architecture."""

    arch: Architecture
    n_runs: int = 0
    n_discarded: int = 0
    cells: dict = field(default_factory=dict)  # (target, init, solution) -> cell
    target_counts: dict = field(default_factory=dict)
    init_counts: dict = field(default_factory=dict)

    def add(self, target: str, init: str, solution: str, loss: float):
        self.n_runs += 1
        self.target_counts[target] = self.target_counts.get(target, 0) + 1
        self.init_counts[init] = self.init_counts.get(init, 0) + 1
        cell = self.cells.setdefault((target, init, solution), PatternCell())
        cell.count += 1
        cell.loss_sum += loss

    def discard(self):
        self.n_runs += 1
        self.n_discarded += 1

    def target_share(self, target: str) -> float:
        kept = self.n_runs - self.n_discarded
        return self.target_counts.get(target, 0) / kept if kept else float("nan")

    def solution_share(self, target: str, solution: str) -> float:
        """Share of a solution pattern among kept runs with this target."""
        total = sum(c.count for (t, _, _), c in self.cells.items() if t == target)
        hit = sum(c.count for (t, _, s), c in self.cells.items()
                  if t == target and s == solution)
        return hit / total if total else float("nan")

    def rows(self) -> list:
        """Stable row dump: (target, init, solution, count, mean_loss)."""
        out = []
        for (t, i, s), cell in sorted(self.cells.items()):
            out.append((t, i, s, cell.count, cell.mean_loss))
        return out


def _pattern_worker(args):
    arch, master_seed, idx, config, n_samples = args
    rng = np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(idx,)))
    k = arch.filter_size
    X = rng.standard_normal((k, n_samples))
    Y = rng.standard_normal((1, n_samples))
    # reduced form ||w - u||^2_{XX^T}: same gradients as the data loss, but
    # zero at a perfect fit, which is what the loss column should report
    Sigma = X @ X.T
    u = np.linalg.solve(Sigma, X @ Y.T).ravel()
    obj = QuadraticObjective(Sigma, u)
    theta0 = arch.random_theta(rng)
    run = gd_train(obj, arch, theta0, config)
    if not run.converged:
        return None
    labels = tuple(
        r.label if r is not None else "?"
        for r in (run.target_rrmp, run.init_rrmp, run.solution_rrmp)
    )
    return labels + (run.loss,)


def run_pattern_experiment(arch: Architecture, n_datasets: int = 1000,
                           seed: int = 0, config: TrainConfig = TrainConfig(),
                           workers: int = None, n_samples: int = 10) -> PatternTable:
    """Gradient descent on random regression data; classify what it reaches.

    Each dataset draws ``n_samples`` standard-normal input/output pairs with
    input size equal to the end-to-end filter size and scalar outputs,
    initializes all layers from a standard normal, and runs gradient descent
    to the gradient tolerance.  Non-converged runs are discarded (counted).
    Seeds are per-dataset, so results do not depend on worker scheduling.
    """
    if n_samples < 1 or n_datasets < 1:
        raise ValueError("need at least one dataset and one sample")
    table = PatternTable(arch)
    jobs = [(arch, seed, i, config, n_samples) for i in range(n_datasets)]
    if workers is None:
        workers = min(multiprocessing.cpu_count(), 8)
    if workers > 1:
        with multiprocessing.Pool(workers) as pool:
            results = pool.map(_pattern_worker, jobs, chunksize=16)
    else:
        results = [_pattern_worker(j) for j in jobs]
    for res in results:
        if res is None:
            table.discard()
        else:
            target, init, solution, loss = res
            table.add(target, init, solution, loss)
    return table


# --- distinct-minima experiment ----------------------------------------------


def count_distinct_filters(filters, tol: float = ROOT_TOL) -> int:
    """Number of distinct end-to-end filters under the entrywise rule.

    Two filters are the same when every entry differs by at most tol times
    the per-entry scale, where the scale is the largest magnitude of that
    entry across the whole list (floored at one).
    """
    if not filters:
        return 0
    stack = np.array([as_filter(w) for w in filters])
    scale = np.maximum(np.max(np.abs(stack), axis=0), 1.0)
    reps = []
    for w in stack:
        if not any(np.all(np.abs(w - r) <= tol * scale) for r in reps):
            reps.append(w)
    return len(reps)


def _distinct_worker(args):
    arch, master_seed, idx, n_inits, config = args
    rng = np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(idx,)))
    k = arch.filter_size
    u = rng.standard_normal(k)
    counts = {}
    for metric, obj in (("euclidean", QuadraticObjective.euclidean(u)),
                        ("bombieri", QuadraticObjective.bombieri(u))):
        sols = []
        for _ in range(n_inits):
            theta0 = arch.random_theta(rng)
            run = gd_train(obj, arch, theta0, config)
            if run.converged:
                sols.append(run.w)
        counts[metric] = count_distinct_filters(sols)
    return counts


@dataclass
class DistinctTable:
    """Distribution of the number of distinct minima per metric."""

    arch: Architecture
    histogram: dict = field(default_factory=dict)  # metric -> {count: n_targets}

    def add(self, metric: str, n_distinct: int):
        h = self.histogram.setdefault(metric, {})
        h[n_distinct] = h.get(n_distinct, 0) + 1

    def share(self, metric: str, n_distinct: int) -> float:
        h = self.histogram.get(metric, {})
        total = sum(h.values())
        return h.get(n_distinct, 0) / total if total else float("nan")

    def mean(self, metric: str) -> float:
        h = self.histogram.get(metric, {})
        total = sum(h.values())
        return sum(k * v for k, v in h.items()) / total if total else float("nan")


def run_distinct_experiment(arch: Architecture, n_targets: int = 100,
                            n_inits: int = 50, seed: int = 0,
                            config: TrainConfig = TrainConfig(),
                            workers: int = None) -> DistinctTable:
    """How many distinct minima gradient descent finds per random target,
    under the Euclidean and the derivative-weighted coefficient metrics."""
    table = DistinctTable(arch)
    jobs = [(arch, seed, i, n_inits, config) for i in range(n_targets)]
    if workers is None:
        workers = min(multiprocessing.cpu_count(), 8)
    if workers > 1:
        with multiprocessing.Pool(workers) as pool:
            results = pool.map(_distinct_worker, jobs, chunksize=4)
    else:
        results = [_distinct_worker(j) for j in jobs]
    for counts in results:
        for metric, n in counts.items():
            table.add(metric, n)
    return table


def region_of_target(u, arch: Architecture, tol: float = ROOT_TOL) -> SpaceRegion:
    """Convenience: interior/boundary/exterior of a target filter."""
    return region_of_rrmp(classify_rrmp(u, tol=tol), arch)
