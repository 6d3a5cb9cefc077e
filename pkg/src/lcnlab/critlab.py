"""Critical points of the quadratic loss restricted to multiple-root strata.

The closure of the function space of a deep linear convolutional network is a
union of multiple-root loci: sets of binary forms whose root multiplicities
refine a fixed partition.  Optimizing a quadratic loss over such a network
therefore leads to two complementary questions that this module answers
numerically:

* which points of a given stratum are critical for the loss restricted to
  that stratum (``crit_on_stratum``), and
* where gradient descent in filter coordinates can get stuck even though the
  function-space picture is benign (``find_spurious_minimum``).

For quadratics (filter size 3) the rank-one stratum admits an exact solver
based on a polynomial eigenvalue problem (``cone_critical_points``), which we
keep alongside the generic Newton search as an independent route.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
from typing import Callable, Sequence

import numpy as np

from .optim import QuadraticObjective
from .poly_core import Architecture, as_filter, poly_mul
from .rootlab import INFINITY, ProjRoot, Rrmp, classify_rrmp, is_compatible

__all__ = [
    "CritPoint",
    "StratumReport",
    "real_type_splits",
    "expand_stratum_point",
    "crit_on_stratum",
    "critical_points_for_target",
    "match_critical_point",
    "cone_lambda_polynomial",
    "cone_critical_points",
    "caustic_value",
    "cone_region_counts",
    "ed_degree",
    "ed_bound",
    "SpuriousMinimum",
    "find_spurious_minimum",
]

# Acceptance thresholds for the Newton search.  _GRAD_TOL is relative to the
# gradient magnitude at the origin, _EIG_BAND to the Hessian spectral radius.
# _COLLAPSE_TOL decides when two chart roots have merged, i.e. the iterate
# slid off the open stratum onto a finer one; converged points separate their
# roots by orders of magnitude more than Newton's terminal wobble.
_GRAD_TOL = 1e-11
_EIG_BAND = 1e-6
_DEDUP_TOL = 1e-7
_COLLAPSE_TOL = 1e-4


# ---------------------------------------------------------------------------
# Real-type splits of a multiplicity partition
# ---------------------------------------------------------------------------


def real_type_splits(lam: Sequence[int]) -> list[Rrmp]:
    """All real root structures refining the complex partition ``lam``.

    Each part of the partition is either carried by a real root or paired
    with an *equal* part to form a conjugate pair.  ``lam = (2, 1, 1)`` for
    example yields the patterns ``112|0`` (all roots real) and ``2|1`` (the
    two simple roots fused into a conjugate pair).
    """
    parts = sorted(lam, reverse=True)
    if any(p <= 0 for p in parts):
        raise ValueError("partition parts must be positive")
    found: set[tuple[tuple[int, ...], tuple[int, ...]]] = set()

    def recurse(remaining: tuple[int, ...], rho: tuple[int, ...], gamma: tuple[int, ...]) -> None:
        if not remaining:
            found.add((tuple(sorted(rho)), tuple(sorted(gamma))))
            return
        head, rest = remaining[0], remaining[1:]
        recurse(rest, rho + (head,), gamma)
        for i, other in enumerate(rest):
            if other == head:
                recurse(rest[:i] + rest[i + 1 :], rho, gamma + (head,))
                break  # equal parts are interchangeable; one pairing suffices
    recurse(tuple(parts), (), ())
    return sorted(
        (Rrmp(rho=r, gamma=g) for r, g in found),
        key=lambda p: (len(p.gamma), p.label),
    )


# ---------------------------------------------------------------------------
# Stratum charts: sigma * prod (cos(phi) x + sin(phi) y)^m * prod (x^2+bxy+cy^2)^m
# ---------------------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class _Chart:
    """Local parameterization of one real type within a stratum."""

    rho: tuple[int, ...]
    gamma: tuple[int, ...]

    @property
    def n_params(self) -> int:
        return 1 + len(self.rho) + 2 * len(self.gamma)

    @property
    def degree(self) -> int:
        return sum(self.rho) + 2 * sum(self.gamma)

    def pattern(self) -> Rrmp:
        return Rrmp(rho=tuple(sorted(self.rho)), gamma=tuple(sorted(self.gamma)))

    def factors(self, params: np.ndarray) -> tuple[float, list[np.ndarray], list[int]]:
        sigma = float(params[0])
        fs: list[np.ndarray] = []
        mults: list[int] = []
        idx = 1
        for m in self.rho:
            phi = params[idx]
            idx += 1
            fs.append(np.array([math.cos(phi), math.sin(phi)]))
            mults.append(m)
        for m in self.gamma:
            b, c = params[idx], params[idx + 1]
            idx += 2
            fs.append(np.array([1.0, b, c]))
            mults.append(m)
        return sigma, fs, mults

    def point(self, params: np.ndarray) -> np.ndarray:
        sigma, fs, mults = self.factors(params)
        w = np.array([sigma])
        for f, m in zip(fs, mults):
            for _ in range(m):
                w = poly_mul(w, f)
        return w

    def jacobian(self, params: np.ndarray) -> np.ndarray:
        """d(point)/d(params), computed factor by factor via complements."""
        sigma, fs, mults = self.factors(params)
        prod = np.array([1.0])
        for f, m in zip(fs, mults):
            for _ in range(m):
                prod = poly_mul(prod, f)
        cols = [prod]  # d/d sigma
        idx = 1
        for slot, m in enumerate(mults):
            # product with one copy of factor `slot` removed
            comp = np.array([1.0])
            for j, (f, mj) in enumerate(zip(fs, mults)):
                reps = mj - 1 if j == slot else mj
                for _ in range(reps):
                    comp = poly_mul(comp, f)
            if slot < len(self.rho):
                phi = params[idx]
                idx += 1
                dfac = np.array([-math.sin(phi), math.cos(phi)])
                cols.append(sigma * m * poly_mul(comp, dfac))
            else:
                idx += 2
                cols.append(sigma * m * poly_mul(comp, np.array([0.0, 1.0, 0.0])))
                cols.append(sigma * m * poly_mul(comp, np.array([0.0, 0.0, 1.0])))
        return np.column_stack(cols)

    def structural_roots(self, params: np.ndarray) -> list[tuple[ProjRoot, int]]:
        """Roots with multiplicities read off the chart, no root finding."""
        _, fs, mults = self.factors(params)
        out: list[tuple[ProjRoot, int]] = []
        for f, m in zip(fs, mults):
            if f.shape[0] == 2:
                cos_phi, sin_phi = f
                if abs(cos_phi) <= 1e-9 * abs(sin_phi):
                    out.append((INFINITY, m))
                else:
                    out.append((ProjRoot(complex(-sin_phi / cos_phi)), m))
            else:
                _, b, c = f
                disc = b * b - 4.0 * c
                root = complex(-b / 2.0, math.sqrt(max(-disc, 0.0)) / 2.0)
                out.append((ProjRoot(root), m))
                out.append((ProjRoot(root.conjugate()), m))
        return out

    def is_interior(self, params: np.ndarray) -> bool:
        """True when the chart point sits on the open stratum it names.

        Rejects collapsed scale, reducible quadratic factors and coinciding
        roots -- all of which belong to smaller strata and would otherwise be
        double counted.  Root collisions are measured both projectively (by
        angle, so clusters at zero or infinity are caught) and by relative
        distance.
        """
        sigma, fs, _ = self.factors(params)
        if abs(sigma) < 1e-10:
            return False
        angles: list[float] = []
        pairs: list[complex] = []
        for f in fs:
            if f.shape[0] == 2:
                angles.append(math.atan2(f[1], f[0]) % math.pi)
            else:
                _, b, c = f
                if b * b - 4.0 * c > -1e-8 * (1.0 + b * b + abs(c)):
                    return False  # quadratic factor (nearly) reducible
                pairs.append(complex(-b / 2.0, math.sqrt(4.0 * c - b * b) / 2.0))
        for a1, a2 in itertools.combinations(angles, 2):
            delta = abs(a1 - a2)
            if min(delta, math.pi - delta) <= _COLLAPSE_TOL:
                return False
        for z1, z2 in itertools.combinations(pairs, 2):
            if abs(z1 - z2) <= _COLLAPSE_TOL * (1.0 + abs(z1) + abs(z2)):
                return False
        return True

    def initial_params(self, rng: np.random.Generator, scale: float) -> np.ndarray:
        params = [rng.standard_normal() * scale]
        for _ in self.rho:
            params.append(rng.uniform(0.0, math.pi))
        for _ in self.gamma:
            re = rng.standard_normal()
            im = abs(rng.standard_normal()) + 0.05
            params.extend([-2.0 * re, re * re + im * im])
        return np.array(params)


# ---------------------------------------------------------------------------
# Critical point containers
# ---------------------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class CritPoint:
    """One critical point of the restricted loss."""

    w: np.ndarray
    lam: tuple[int, ...]
    pattern: Rrmp
    loss: float
    grad_norm: float
    kind: str  # "MIN" | "MAX" | "SADDLE" | "DEGENERATE"

    def is_rational(self, denominator_bound: int = 64, tol: float = 1e-9) -> bool:
        """Heuristic check that every coordinate is a small-denominator rational."""
        for x in self.w:
            num_den = _as_small_rational(float(x), denominator_bound, tol)
            if num_den is None:
                return False
        return True


def _as_small_rational(x: float, max_den: int, tol: float) -> tuple[int, int] | None:
    from fractions import Fraction

    frac = Fraction(x).limit_denominator(max_den)
    if abs(float(frac) - x) <= tol * max(1.0, abs(x)):
        return frac.numerator, frac.denominator
    return None


@dataclasses.dataclass(frozen=True)
class StratumReport:
    lam: tuple[int, ...]
    points: tuple[CritPoint, ...]

    @property
    def n_real(self) -> int:
        return len(self.points)

    def minima(self) -> tuple[CritPoint, ...]:
        return tuple(p for p in self.points if p.kind == "MIN")


# ---------------------------------------------------------------------------
# Newton search over one stratum
# ---------------------------------------------------------------------------


def _chart_gradient(chart: _Chart, objective: QuadraticObjective, params: np.ndarray) -> np.ndarray:
    w = chart.point(params)
    return chart.jacobian(params).T @ objective.grad(w)


def _newton_on_gradient(
    fun: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    *,
    scale: float,
    max_iters: int = 80,
    fd_step: float = 1e-6,
) -> np.ndarray | None:
    """Solve fun(x) = 0 by damped Newton with a finite-difference Jacobian."""
    x = np.array(x0, dtype=float)
    n = x.shape[0]
    for _ in range(max_iters):
        g = fun(x)
        if not np.all(np.isfinite(g)):
            return None
        if np.linalg.norm(g) <= _GRAD_TOL * scale:
            return x
        jac = np.empty((n, n))
        for j in range(n):
            h = fd_step * (1.0 + abs(x[j]))
            xp = x.copy()
            xp[j] += h
            xm = x.copy()
            xm[j] -= h
            jac[:, j] = (fun(xp) - fun(xm)) / (2.0 * h)
        try:
            step = np.linalg.solve(jac, g)
        except np.linalg.LinAlgError:
            step, *_ = np.linalg.lstsq(jac, g, rcond=None)
        norm = np.linalg.norm(step)
        if norm > 10.0:
            step *= 10.0 / norm
        x = x - step
        if not np.all(np.isfinite(x)):
            return None
    g = fun(x)
    if np.all(np.isfinite(g)) and np.linalg.norm(g) <= _GRAD_TOL * scale:
        return x
    return None


def _classify_hessian(
    fun_value: Callable[[np.ndarray], float], x: np.ndarray, fd_step: float = 1e-5
) -> str:
    n = x.shape[0]
    hess = np.empty((n, n))
    steps = [fd_step * (1.0 + abs(x[i])) for i in range(n)]
    f0 = fun_value(x)
    for i in range(n):
        for j in range(i, n):
            if i == j:
                xp = x.copy()
                xp[i] += steps[i]
                xm = x.copy()
                xm[i] -= steps[i]
                hess[i, i] = (fun_value(xp) - 2.0 * f0 + fun_value(xm)) / steps[i] ** 2
            else:
                xpp = x.copy()
                xpp[[i, j]] += [steps[i], steps[j]]
                xpm = x.copy()
                xpm[i] += steps[i]
                xpm[j] -= steps[j]
                xmp = x.copy()
                xmp[i] -= steps[i]
                xmp[j] += steps[j]
                xmm = x.copy()
                xmm[[i, j]] -= [steps[i], steps[j]]
                hess[i, j] = hess[j, i] = (
                    fun_value(xpp) - fun_value(xpm) - fun_value(xmp) + fun_value(xmm)
                ) / (4.0 * steps[i] * steps[j])
    eigs = np.linalg.eigvalsh(hess)
    band = _EIG_BAND * max(np.max(np.abs(eigs)), 1e-300)
    if np.any(np.abs(eigs) <= band):
        return "DEGENERATE"
    if np.all(eigs > 0):
        return "MIN"
    if np.all(eigs < 0):
        return "MAX"
    return "SADDLE"


def _same_filter(w1: np.ndarray, w2: np.ndarray, tol: float) -> bool:
    scale = max(float(np.max(np.abs(w1))), float(np.max(np.abs(w2))), 1.0)
    return bool(np.all(np.abs(w1 - w2) <= tol * scale))


def crit_on_stratum(
    objective: QuadraticObjective,
    lam: Sequence[int],
    *,
    n_starts: int = 200,
    seed: int = 0,
    dedup_tol: float = 1e-7,
) -> StratumReport:
    """Find real critical points of ``objective`` restricted to one stratum.

    Runs a seeded multi-start Newton search in the chart of every real type
    of the partition, keeps converged points that genuinely lie on the open
    stratum, and deduplicates by coefficient vectors.  The Hessian of the
    chart function types each survivor (its inertia is chart independent at
    a critical point).
    """
    lam = tuple(sorted((int(p) for p in lam), reverse=True))
    k = objective.matrix.shape[0]
    if sum(lam) != k - 1:
        raise ValueError(f"partition {lam} does not sum to the polynomial degree {k - 1}")
    rng = np.random.default_rng(seed)
    grad_scale = float(np.linalg.norm(objective.grad(np.zeros(k)))) + 1.0
    mu_vec = objective.matrix @ objective.target

    points: list[CritPoint] = []
    for split in real_type_splits(lam):
        chart = _Chart(rho=split.rho, gamma=split.gamma)

        # The loss is quadratic in the overall scale, so every critical point
        # carries the optimal scale for its root configuration.  Solving for
        # it in closed form removes the flat sigma = 0 manifold that would
        # otherwise swallow most Newton starts.
        def full_params(shape: np.ndarray) -> np.ndarray:
            monic = chart.point(np.concatenate(([1.0], shape)))
            sigma = float(monic @ mu_vec) / float(monic @ objective.matrix @ monic)
            return np.concatenate(([sigma], shape))

        def shape_grad(shape: np.ndarray) -> np.ndarray:
            return _chart_gradient(chart, objective, full_params(shape))[1:]

        value = lambda p, ch=chart: objective.value(ch.point(p))
        kept: list[tuple[np.ndarray, np.ndarray]] = []
        for _ in range(n_starts):
            start = chart.initial_params(rng, 1.0)[1:]
            shape = _newton_on_gradient(shape_grad, start, scale=grad_scale)
            if shape is None:
                continue
            params = full_params(shape)
            if not chart.is_interior(params):
                continue
            w = chart.point(params)
            if not any(_same_filter(w, w_prev, dedup_tol) for w_prev, _ in kept):
                kept.append((w, params))
        for w, params in kept:
            points.append(
                CritPoint(
                    w=w,
                    lam=lam,
                    pattern=chart.pattern(),
                    loss=float(objective.value(w)),
                    grad_norm=float(
                        np.linalg.norm(_chart_gradient(chart, objective, params))
                    ),
                    kind=_classify_hessian(value, params),
                )
            )
    points.sort(key=lambda p: p.loss)
    return StratumReport(lam=lam, points=tuple(points))


def expand_stratum_point(pattern: Rrmp, roots: Sequence[ProjRoot], sigma: float) -> np.ndarray:
    """Assemble the coefficient vector for given roots and multiplicities.

    Convenience used in tests and by the CLI to write down stratum points
    exactly: real roots are listed first (matching ``pattern.rho``), then one
    representative per conjugate pair (matching ``pattern.gamma``).
    """
    if len(roots) != len(pattern.rho) + len(pattern.gamma):
        raise ValueError("need one root per real part and one per conjugate pair")
    w = np.array([sigma])
    for m, r in zip(pattern.rho, roots):
        factor = np.array([0.0, 1.0]) if r.infinite else np.array([1.0, -r.value.real])
        for _ in range(m):
            w = poly_mul(w, factor)
    for m, r in zip(pattern.gamma, roots[len(pattern.rho) :]):
        z = r.value
        factor = np.array([1.0, -2.0 * z.real, abs(z) ** 2])
        for _ in range(m):
            w = poly_mul(w, factor)
    return w


def critical_points_for_target(
    u: np.ndarray,
    arch: Architecture,
    *,
    objective: QuadraticObjective | None = None,
    n_starts: int = 200,
    seed: int = 0,
) -> list[StratumReport]:
    """Search every non-trivial stratum whose patterns the architecture attains."""
    u = as_filter(u)
    if objective is None:
        objective = QuadraticObjective.euclidean(u)
    degree = u.shape[0] - 1
    reports = []
    for lam in _partitions_of(degree):
        if len(lam) == degree:  # trivial stratum: dense filters, not a constraint
            continue
        if not any(is_compatible(split, arch) for split in real_type_splits(lam)):
            continue
        reports.append(crit_on_stratum(objective, lam, n_starts=n_starts, seed=seed))
    return reports


def _partitions_of(n: int) -> list[tuple[int, ...]]:
    out: list[tuple[int, ...]] = []

    def gen(rest: int, cap: int, acc: tuple[int, ...]) -> None:
        if rest == 0:
            out.append(acc)
            return
        for part in range(min(rest, cap), 0, -1):
            gen(rest - part, part, acc + (part,))

    gen(n, n, ())
    return out


def match_critical_point(
    w: np.ndarray, reports: Sequence[StratumReport], tol: float = 1e-4
) -> CritPoint | None:
    """Identify a numerically obtained filter with a catalogued critical point."""
    w = as_filter(w)
    best: tuple[float, CritPoint] | None = None
    for report in reports:
        for point in report.points:
            if point.w.shape != w.shape:
                continue
            err = float(np.max(np.abs(point.w - w)))
            if err <= tol * max(1.0, float(np.max(np.abs(point.w)))):
                if best is None or err < best[0]:
                    best = (err, point)
    return None if best is None else best[1]


# ---------------------------------------------------------------------------
# Exact solver on the quadratic cone (filter size 3, rank-one stratum)
# ---------------------------------------------------------------------------

_CONE_J = np.array([[0.0, 0.0, 1.0], [0.0, -0.5, 0.0], [1.0, 0.0, 0.0]])


def _poly_det3(m: list[list[np.ndarray]]) -> np.ndarray:
    """Determinant of a 3x3 matrix of polynomials (coefficient arrays)."""

    def mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return np.convolve(a, b)

    def add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        n = max(a.shape[0], b.shape[0])
        out = np.zeros(n)
        out[n - a.shape[0] :] += a
        out[n - b.shape[0] :] += b
        return out

    def sub(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return add(a, -b)

    t0 = mul(m[0][0], sub(mul(m[1][1], m[2][2]), mul(m[1][2], m[2][1])))
    t1 = mul(m[0][1], sub(mul(m[1][0], m[2][2]), mul(m[1][2], m[2][0])))
    t2 = mul(m[0][2], sub(mul(m[1][0], m[2][1]), mul(m[1][1], m[2][0])))
    return add(sub(t0, t1), t2)


def cone_lambda_polynomial(
    sigma: np.ndarray, v: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Multiplier polynomial whose real roots give the cone critical points.

    For the quadratic cone (coefficient vectors of perfect squares, up to
    sign) a Lagrange multiplier argument shows every critical point of the
    data loss has the form ``w = v (Sigma - lam J)^{-1}`` where ``lam`` solves
    a degree-four polynomial: writing ``(A, B, C)`` for the components of
    ``v . adj(Sigma - lam J)``, the multiplier equation is the vanishing of
    ``B^2 - 4 A C``.  Returns ``(quartic, A, B, C)`` with all coefficient
    arrays highest degree first.
    """
    sigma = np.asarray(sigma, dtype=float)
    v = np.asarray(v, dtype=float).reshape(3)
    if sigma.shape != (3, 3):
        raise ValueError("the cone solver works on 3x3 Gram matrices")
    # entries of Sigma - lam*J as degree<=1 polynomials in lam
    entry = [[np.array([-_CONE_J[i][j], sigma[i][j]]) for j in range(3)] for i in range(3)]

    def minor(i: int, j: int) -> np.ndarray:
        rows = [r for r in range(3) if r != i]
        cols = [c for c in range(3) if c != j]
        a, b = entry[rows[0]][cols[0]], entry[rows[0]][cols[1]]
        c, d = entry[rows[1]][cols[0]], entry[rows[1]][cols[1]]
        return np.convolve(a, d) - np.convolve(b, c)

    # adjugate: adj[i][j] = (-1)^(i+j) * minor(j, i)
    adj = [[(-1) ** (i + j) * minor(j, i) for j in range(3)] for i in range(3)]
    comps = []
    for j in range(3):
        acc = np.zeros(3)
        for i in range(3):
            acc = acc + v[i] * adj[i][j]
        comps.append(acc)
    a_pol, b_pol, c_pol = comps
    quartic = np.convolve(b_pol, b_pol) - 4.0 * np.convolve(a_pol, c_pol)
    return quartic, a_pol, b_pol, c_pol


def _cone_chart_value(objective: QuadraticObjective, sign: float, alpha: float, beta: float) -> float:
    w = sign * np.array([alpha * alpha, 2.0 * alpha * beta, beta * beta])
    return float(objective.value(w))


def _classify_cone_point(objective: QuadraticObjective, w: np.ndarray) -> str:
    sign = 1.0 if w[0] + w[2] >= 0 else -1.0
    q = sign * w
    alpha = math.sqrt(max(q[0], 0.0))
    if alpha > 1e-12:
        beta = q[1] / (2.0 * alpha)
    else:
        beta = math.sqrt(max(q[2], 0.0))
    return _classify_hessian(
        lambda p: _cone_chart_value(objective, sign, p[0], p[1]), np.array([alpha, beta])
    )


def cone_critical_points(
    u: np.ndarray, sigma: np.ndarray | None = None, *, root_tol: float = 1e-9
) -> list[CritPoint]:
    """All critical points of the loss on the quadratic cone, solved exactly.

    ``sigma`` is the Gram matrix of the data (identity for the plain
    Euclidean distance); ``u`` is the unconstrained optimum.  One critical
    point is produced per real root of the multiplier polynomial.
    """
    u = as_filter(u)
    if sigma is None:
        sigma = np.eye(3)
    sigma = np.asarray(sigma, dtype=float)
    v = sigma @ u  # row vector Y X^T in the normal-equation form
    objective = QuadraticObjective(matrix=sigma, target=u)
    quartic, *_ = cone_lambda_polynomial(sigma, v)
    if float(np.max(np.abs(quartic))) < 1e-300:
        raise ValueError("degenerate multiplier polynomial; target is too special")
    points: list[CritPoint] = []

    def push(w: np.ndarray) -> None:
        disc = w[1] ** 2 - 4.0 * w[0] * w[2]
        w_scale = max(float(np.max(np.abs(w))), 1.0)
        if abs(disc) > 1e-6 * w_scale**2:
            return  # numerical artifact, not on the cone
        if any(_same_filter(w, p.w, _DEDUP_TOL) for p in points):
            return
        points.append(
            CritPoint(
                w=w,
                lam=(2,),
                pattern=Rrmp(rho=(2,), gamma=()),
                loss=float(objective.value(w)),
                grad_norm=0.0,
                kind=_classify_cone_point(objective, w),
            )
        )

    for lam_root in np.roots(quartic):
        if abs(lam_root.imag) > root_tol * (1.0 + abs(lam_root)):
            continue
        m = sigma - float(lam_root.real) * _CONE_J  # symmetric
        eigvals, eigvecs = np.linalg.eigh(m)
        m_scale = float(np.max(np.abs(eigvals)))
        if float(np.min(np.abs(eigvals))) > 1e-7 * m_scale:
            push(np.linalg.solve(m, v))
            continue
        # Multiplier hits an eigenvalue of the pencil: solutions form a line
        # w_p + t * n through the least-norm solution, and the cone equation
        # picks out up to two points on it.  Happens on symmetry slices of
        # the target, e.g. palindromic quadratics.
        null_dirs = [eigvecs[:, i] for i in range(3) if abs(eigvals[i]) <= 1e-7 * m_scale]
        if len(null_dirs) != 1:
            continue
        n = null_dirs[0]
        if abs(n @ v) > 1e-8 * (np.linalg.norm(v) + 1.0):
            continue  # inconsistent system: no finite critical point here
        w_p = np.linalg.pinv(m, rcond=1e-9) @ v
        # q(t) = (w_p + t n)^T J (w_p + t n), with disc = -4 w^T J w / ... = 0
        qa = float(n @ _CONE_J @ n)
        qb = 2.0 * float(n @ _CONE_J @ w_p)
        qc = float(w_p @ _CONE_J @ w_p)
        if abs(qa) < 1e-14:
            ts = [-qc / qb] if abs(qb) > 1e-14 else []
        else:
            rad = qb * qb - 4.0 * qa * qc
            if rad < 0.0:
                ts = []
            else:
                ts = [(-qb + math.sqrt(rad)) / (2.0 * qa), (-qb - math.sqrt(rad)) / (2.0 * qa)]
        for t in ts:
            push(w_p + t * n)
    points.sort(key=lambda p: p.loss)
    return points


def caustic_value(u: np.ndarray) -> float:
    """Sign of the curve separating the 4- and 2-critical-point regimes.

    Negative inside the caustic (two minima and two saddles on the cone for
    an identity Gram matrix), positive outside.
    """
    u1, u2, u3 = as_filter(u)
    return float(
        32 * u1**6 + 435 * u1**4 * u2**2 + 384 * u1**2 * u2**4 + 256 * u2**6
        - 240 * u1**5 * u3 - 960 * u1**3 * u2**2 * u3 - 960 * u1 * u2**4 * u3
        + 696 * u1**4 * u3**2 + 1098 * u1**2 * u2**2 * u3**2 + 384 * u2**4 * u3**2
        - 980 * u1**3 * u3**3 - 960 * u1 * u2**2 * u3**3
        + 696 * u1**2 * u3**4 + 435 * u2**2 * u3**4 - 240 * u1 * u3**5 + 32 * u3**6
    )


def cone_region_counts(u: np.ndarray, sigma: np.ndarray | None = None) -> tuple[int, int]:
    """Count (minima, saddles) of the loss restricted to the quadratic cone."""
    points = cone_critical_points(u, sigma)
    n_min = sum(1 for p in points if p.kind == "MIN")
    n_saddle = sum(1 for p in points if p.kind == "SADDLE")
    return n_min, n_saddle


# ---------------------------------------------------------------------------
# Euclidean distance degrees
# ---------------------------------------------------------------------------

# Worked values for quartic binary forms (degree 4 strata); the hook-shaped
# partitions follow the closed forms below, (2, 2) does not.
_ED_GENERIC_22 = 13
_ED_SPECIAL_22 = 7


def ed_degree(lam: Sequence[int], degree: int, *, metric: str = "generic") -> int:
    """Euclidean distance degree of a multiple-root stratum.

    ``metric="generic"`` is a generic quadratic distance on coefficients;
    ``metric="special"`` the weighted distance under which products of linear
    forms behave like tensors.  Closed forms exist for hook partitions
    ``(alpha, 1, ..., 1)``; the ``(2, 2)`` values are included for quartics.
    """
    lam = tuple(sorted((int(p) for p in lam), reverse=True))
    if sum(lam) != degree:
        raise ValueError(f"partition {lam} does not sum to {degree}")
    if metric not in ("generic", "special"):
        raise ValueError("metric must be 'generic' or 'special'")
    if len(lam) == 0 or all(p == 1 for p in lam):
        return 1  # dense stratum: the target itself
    if all(p == 1 for p in lam[1:]):
        alpha = lam[0]
        if metric == "generic":
            return (2 * alpha - 1) * degree - 2 * (alpha - 1) ** 2
        return degree
    if lam == (2, 2) and degree == 4:
        return _ED_GENERIC_22 if metric == "generic" else _ED_SPECIAL_22
    raise ValueError(f"no closed form implemented for partition {lam}")


def ed_bound(arch: Architecture, *, metric: str = "generic") -> int:
    """Upper bound on critical points of a generic quadratic loss for ``arch``.

    One critical point comes from the dense stratum; each non-trivial
    multiplicity partition the architecture can realize contributes at most
    its ED degree.
    """
    degree = arch.filter_size - 1
    total = 1
    for lam in _partitions_of(degree):
        if len(lam) == degree:
            continue
        if any(is_compatible(split, arch) for split in real_type_splits(lam)):
            total += ed_degree(lam, degree, metric=metric)
    return total


# ---------------------------------------------------------------------------
# Spurious minima in filter coordinates
# ---------------------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class SpuriousMinimum:
    """A strict local minimum of the parameterized loss with non-zero loss."""

    theta: tuple[np.ndarray, ...]
    chart: np.ndarray  # free coordinates: first filter minus its pinned lead
    w: np.ndarray
    loss: float
    grad_norm: float
    hessian_eigs: np.ndarray

    @property
    def pattern(self) -> Rrmp:
        return classify_rrmp(self.w)


def find_spurious_minimum(
    u: np.ndarray,
    arch: Architecture | None = None,
    *,
    n_starts: int = 400,
    seed: int = 0,
    loss_floor: float = 1e-8,
) -> SpuriousMinimum:
    """Search filter space for a strict local minimum with non-zero loss.

    Works in the chart that pins the leading coordinate of the first filter
    to one (removing the rescaling symmetry of the parameterization), finds
    critical points of the end-to-end loss by multi-start Newton, and
    returns the lowest strict local minimum whose loss exceeds
    ``loss_floor``.  Raises ``ValueError`` when no such point is found --
    for many targets none exists.
    """
    u = as_filter(u)
    if arch is None:
        arch = Architecture(ks=(2, u.shape[0] - 1), strides=(1, 1))
    if arch.filter_size != u.shape[0]:
        raise ValueError("target length does not match the architecture's filter size")
    if arch.depth != 2 or not arch.is_stride_one:
        raise ValueError("the chart search supports two stride-one layers")
    k1, k2 = arch.ks

    def theta_of(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return np.concatenate(([1.0], x[: k1 - 1])), x[k1 - 1 :]

    def value(x: np.ndarray) -> float:
        w1, w2 = theta_of(x)
        return float(np.sum((np.convolve(w1, w2) - u) ** 2))

    def grad(x: np.ndarray) -> np.ndarray:
        w1, w2 = theta_of(x)
        r = 2.0 * (np.convolve(w1, w2) - u)
        g1 = np.correlate(r, w2, mode="valid")  # d/d w1, then drop the pinned entry
        g2 = np.correlate(r, w1, mode="valid")
        return np.concatenate((g1[1:], g2))

    def hessian_eigs(x: np.ndarray) -> np.ndarray:
        n = x.shape[0]
        hess = np.empty((n, n))
        for j in range(n):
            h = 1e-6 * (1.0 + abs(x[j]))
            xp = x.copy()
            xp[j] += h
            xm = x.copy()
            xm[j] -= h
            hess[:, j] = (grad(xp) - grad(xm)) / (2.0 * h)
        return np.linalg.eigvalsh(0.5 * (hess + hess.T))

    rng = np.random.default_rng(seed)
    scale = float(np.linalg.norm(u)) + 1.0
    candidates: list[SpuriousMinimum] = []
    for _ in range(n_starts):
        x0 = rng.standard_normal(k1 - 1 + k2) * scale
        x = _newton_on_gradient(grad, x0, scale=scale)
        if x is None:
            continue
        loss = value(x)
        if loss <= loss_floor:
            continue
        eigs = hessian_eigs(x)
        if np.min(eigs) <= _EIG_BAND * float(np.max(np.abs(eigs))):
            continue  # saddle or degenerate
        w1, w2 = theta_of(x)
        w = np.convolve(w1, w2)
        if any(_same_filter(w, c.w, 1e-6) for c in candidates):
            continue
        candidates.append(
            SpuriousMinimum(
                theta=(w1, w2),
                chart=x,
                w=w,
                loss=loss,
                grad_norm=float(np.linalg.norm(grad(x))),
                hessian_eigs=eigs,
            )
        )
    if not candidates:
        raise ValueError("no strict positive-loss local minimum found")
    candidates.sort(key=lambda p: p.loss)
    return candidates[0]
