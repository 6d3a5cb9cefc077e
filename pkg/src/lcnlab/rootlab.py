"""Projective roots of filter polynomials and their multiplicity patterns.

A filter of size k is the binary form w_0 x^{k-1} + ... + w_{k-1} y^{k-1};
its k-1 roots live on the projective line (leading zero coefficients put
roots at infinity).  The multiplicity pattern of the *real* locus — written
``rho|gamma`` where rho collects multiplicities of real roots and gamma those
of complex-conjugate pairs — drives everything in the function-space and
critical-point analysis, so this module owns:

* a simultaneous-iteration root finder (Aberth-Ehrlich) with Newton polish,
* tolerance-based clustering and pattern classification,
* exact sign-chart classification via closed-form discriminants (degree <= 4),
* the bins-with-colored-balls compatibility test between a pattern and an
  architecture.

Clustering at relative tolerance cannot certify deep multiplicities computed
from a single high-degree polynomial (an exact m-fold root scatters like
eps^(1/m) under floating point); callers that know the factor structure
should classify from it instead of re-rooting the product.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .poly_core import as_filter

#: Default relative tolerance for "is real" / "are equal" root decisions.
ROOT_TOL = 1e-4

#: |value| <= ZERO_BAND * scale counts as an exact zero in sign charts.
ZERO_BAND = 1e-12

_RESIDUAL_BOUND = 1e-10


class RootFindingError(RuntimeError):
    """Raised when the iteration cannot certify the computed roots."""


@dataclass(frozen=True)
class ProjRoot:
    """A root on the projective line: a complex number or the point at infinity."""

    value: complex = 0j
    infinite: bool = False

    @staticmethod
    def finite(z) -> "ProjRoot":
        return ProjRoot(complex(z), False)

    def conjugate(self) -> "ProjRoot":
        if self.infinite:
            return self
        return ProjRoot(self.value.conjugate(), False)

    def is_real(self, tol: float = ROOT_TOL) -> bool:
        if self.infinite:
            return True
        return abs(self.value.imag) <= tol * abs(self.value)

    def __repr__(self):
        return "ProjRoot(inf)" if self.infinite else f"ProjRoot({self.value!r})"


INFINITY = ProjRoot(0j, True)


def same_root(a: ProjRoot, b: ProjRoot, tol: float = ROOT_TOL) -> bool:
    """Relative-tolerance equality; infinity only ever matches infinity."""
    if a.infinite or b.infinite:
        return a.infinite and b.infinite
    return abs(a.value - b.value) <= tol * max(abs(a.value), abs(b.value))


def _homogeneous_residual(coeffs: np.ndarray, root: ProjRoot) -> float:
    """|P(x, y)| at the unit-normalized representative of the root."""
    k = len(coeffs)
    if root.infinite:
        x, y = 1.0 + 0j, 0j
    else:
        n = math.hypot(abs(root.value), 1.0)
        x, y = root.value / n, 1.0 / n
    return abs(sum(coeffs[j] * x ** (k - 1 - j) * y**j for j in range(k)))


def _aberth(core: np.ndarray, rng: np.random.Generator,
            max_iters: int = 200, polish_steps: int = 5) -> np.ndarray:
    """All complex roots of a polynomial with nonzero first/last coefficient.

    ``core`` is in descending order.  Starts from a randomly rotated circle,
    runs the simultaneous Aberth-Ehrlich update, then a few plain Newton
    steps per root.
    """
    a = core / core[0]
    m = len(a) - 1
    if m == 1:
        return np.array([-a[1]], dtype=complex)

    deriv = np.polyder(a)
    radius = 1.0 + np.max(np.abs(a[1:]))
    phase = rng.uniform(0.0, 2.0 * np.pi)
    jitter = rng.uniform(-0.05, 0.05, size=m)
    angles = phase + 2.0 * np.pi * (np.arange(m) + jitter) / m
    z = radius * (0.7 + 0.1 * jitter) * np.exp(1j * angles)

    for _ in range(max_iters):
        p = np.polyval(a, z)
        dp = np.polyval(deriv, z)
        dp = np.where(dp == 0, 1e-300, dp)
        newton = p / dp
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        inv = 1.0 / diff
        np.fill_diagonal(inv, 0.0)
        denom = 1.0 - newton * inv.sum(axis=1)
        denom = np.where(denom == 0, 1e-300, denom)
        step = newton / denom
        z = z - step
        if np.max(np.abs(step) / (1.0 + np.abs(z))) < 1e-14:
            break

    for _ in range(polish_steps):
        dp = np.polyval(deriv, z)
        mask = np.abs(dp) > 0
        z = np.where(mask, z - np.polyval(a, z) / np.where(mask, dp, 1.0), z)
    return z


def find_roots(coeffs, seed: int = 0) -> list:
    """All k-1 projective roots of a size-k filter, with multiplicity.

    Leading zero coefficients become roots at infinity, trailing zeros roots
    at 0; the remaining core is solved numerically (seeded, deterministic).
    Residuals are certified against the largest coefficient; on failure the
    companion-matrix fallback is tried before giving up.
    """
    w = as_filter(coeffs)
    scale = np.max(np.abs(w))
    if scale == 0:
        raise ValueError("the zero filter has no root data")
    k = len(w)
    if k == 1:
        return []

    n_inf = 0
    while w[n_inf] == 0:
        n_inf += 1
    n_zero = 0
    while w[k - 1 - n_zero] == 0:
        n_zero += 1
    core = w[n_inf : k - n_zero]

    roots = [INFINITY] * n_inf + [ProjRoot.finite(0.0)] * n_zero
    if len(core) > 1:
        rng = np.random.default_rng(seed)
        z = _aberth(core, rng)
        finite = [ProjRoot.finite(zi) for zi in z]
        if any(_homogeneous_residual(core, r) > _RESIDUAL_BOUND * np.max(np.abs(core))
               for r in finite):
            z = np.roots(core)
            deriv = np.polyder(core)
            for _ in range(5):
                dp = np.polyval(deriv, z)
                mask = np.abs(dp) > 0
                z = np.where(mask, z - np.polyval(core, z) / np.where(mask, dp, 1.0), z)
            finite = [ProjRoot.finite(zi) for zi in z]
            bad = max(_homogeneous_residual(core, r) for r in finite)
            if bad > _RESIDUAL_BOUND * np.max(np.abs(core)):
                raise RootFindingError(
                    f"root residual {bad:.3e} exceeds bound for coefficients {w}"
                )
        roots += finite
    return roots


def cluster_roots(roots, tol: float = ROOT_TOL) -> list:
    """Single-linkage clusters under the relative same-root predicate."""
    n = len(roots)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if same_root(roots[i], roots[j], tol):
                parent[find(i)] = find(j)

    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(roots[i])
    return list(groups.values())


def _cluster_rep(cluster) -> ProjRoot:
    if cluster[0].infinite:
        return INFINITY
    return ProjRoot.finite(np.mean([r.value for r in cluster]))


@dataclass(frozen=True)
class Rrmp:
    """Real-root multiplicity pattern: multiplicities of the real roots
    (``rho``, counting roots at infinity as real) and of the complex-conjugate
    pairs (``gamma``), each stored sorted ascending."""

    rho: tuple = ()
    gamma: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "rho", tuple(sorted(int(m) for m in self.rho)))
        object.__setattr__(self, "gamma", tuple(sorted(int(m) for m in self.gamma)))
        if any(m < 1 for m in self.rho) or any(m < 1 for m in self.gamma):
            raise ValueError(f"multiplicities must be positive: {self}")

    @property
    def degree(self) -> int:
        return sum(self.rho) + 2 * sum(self.gamma)

    @property
    def n_real(self) -> int:
        """Number of real roots counted with multiplicity."""
        return sum(self.rho)

    @property
    def n_odd_real(self) -> int:
        return sum(1 for m in self.rho if m % 2 == 1)

    @property
    def is_generic(self) -> bool:
        return all(m == 1 for m in self.rho) and all(m == 1 for m in self.gamma)

    def partition(self) -> tuple:
        """Multiplicities over the complex roots (each pair counted twice),
        sorted descending."""
        parts = list(self.rho) + [g for g in self.gamma for _ in (0, 1)]
        return tuple(sorted(parts, reverse=True))

    @property
    def label(self) -> str:
        left = "".join(str(m) for m in self.rho) or "0"
        right = "".join(str(m) for m in self.gamma) or "0"
        return f"{left}|{right}"

    @staticmethod
    def from_label(label: str) -> "Rrmp":
        try:
            left, right = label.split("|")
        except ValueError:
            raise ValueError(f"pattern label must look like '112|0', got {label!r}")
        rho = tuple(int(c) for c in left if c != "0")
        gamma = tuple(int(c) for c in right if c != "0")
        return Rrmp(rho, gamma)

    def __str__(self):
        return self.label


def classify_roots(roots, tol: float = ROOT_TOL) -> Rrmp:
    """Pattern of a multiset of projective roots after clustering.

    A cluster is real when its mean is (infinity counts as real); the
    remaining clusters are paired with their conjugates, which must match
    exactly for a real polynomial.
    """
    clusters = cluster_roots(roots, tol)
    rho, complex_clusters = [], []
    for c in clusters:
        rep = _cluster_rep(c)
        if rep.is_real(tol):
            rho.append(len(c))
        else:
            complex_clusters.append((rep, len(c)))

    gamma = []
    used = [False] * len(complex_clusters)
    for i, (rep, size) in enumerate(complex_clusters):
        if used[i]:
            continue
        mate = None
        for j in range(i + 1, len(complex_clusters)):
            if used[j]:
                continue
            other, osize = complex_clusters[j]
            if osize == size and same_root(other, rep.conjugate(), max(tol, 1e-6)):
                mate = j
                break
        if mate is None:
            raise RootFindingError(
                f"conjugate pairing failed near {rep.value}; is the input real?"
            )
        used[i] = used[mate] = True
        gamma.append(size)
    return Rrmp(tuple(rho), tuple(gamma))


def classify_rrmp(coeffs, tol: float = ROOT_TOL, seed: int = 0) -> Rrmp:
    """Pattern of a single filter via numeric roots + clustering."""
    return classify_roots(find_roots(coeffs, seed=seed), tol)


def classify_rrmp_pooled(filters, tol: float = ROOT_TOL, seed: int = 0) -> Rrmp:
    """Pattern of a product of filters from the union of per-factor roots.

    Rooting each small factor separately keeps multiple roots that are split
    across factors well-conditioned (no eps^(1/m) scatter).
    """
    pooled = []
    for w in filters:
        pooled.extend(find_roots(w, seed=seed))
    return classify_roots(pooled, tol)


# --- closed-form sign charts (degree <= 4) ---------------------------------


def _sgn(value: float, scale: float, band: float) -> int:
    if abs(value) <= band * scale:
        return 0
    return 1 if value > 0 else -1


def disc_quadratic(c) -> float:
    a, b, cc = as_filter(c)
    return b * b - 4 * a * cc


def disc_cubic(c) -> float:
    a, b, cc, d = as_filter(c)
    return (b * b * cc * cc - 4 * a * cc**3 - 4 * b**3 * d
            - 27 * a * a * d * d + 18 * a * b * cc * d)


def depress_quartic(c) -> np.ndarray:
    """Coefficients (1, 0, p, q, r) of f(x - b1/4 y, y) for a monic-normalized
    quartic f; requires a nonzero leading coefficient."""
    c = as_filter(c)
    if len(c) != 5:
        raise ValueError(f"need 5 quartic coefficients, got {len(c)}")
    if c[0] == 0:
        raise ValueError("leading coefficient vanishes; no monic normalization")
    _, b1, b2, b3, b4 = c / c[0]
    p = b2 - 3 * b1 * b1 / 8
    q = b3 - b1 * b2 / 2 + b1**3 / 8
    r = b4 - b1 * b3 / 4 + b1 * b1 * b2 / 16 - 3 * b1**4 / 256
    return np.array([1.0, 0.0, p, q, r])


def disc_quartic_depressed(p: float, q: float, r: float):
    """(delta, delta') of x^4 + p x^2 y^2 + q x y^3 + r y^4."""
    delta = (256 * r**3 - 128 * p * p * r * r + 144 * p * q * q * r
             + 16 * p**4 * r - 27 * q**4 - 4 * p**3 * q * q)
    dprime = 8 * p * r - 9 * q * q - 2 * p**3
    return delta, dprime


def _quartic_scales(p, q, r):
    s_delta = max(abs(256 * r**3), abs(128 * p * p * r * r), abs(144 * p * q * q * r),
                  abs(16 * p**4 * r), abs(27 * q**4), abs(4 * p**3 * q * q))
    s_dprime = max(abs(8 * p * r), abs(9 * q * q), abs(2 * p**3))
    return s_delta, s_dprime


def rrmp_classify_by_signs(coeffs, band: float = ZERO_BAND) -> Rrmp:
    """Pattern of a degree-2..4 form from discriminant sign charts alone.

    Values within ``band`` times the largest monomial of each formula are
    treated as exact zeros; the leading coefficient must be nonzero.
    """
    c = as_filter(coeffs)
    deg = len(c) - 1
    if c[0] == 0:
        raise ValueError("leading coefficient vanishes; dehomogenize first")
    if deg == 2:
        a, b, cc = c
        disc = disc_quadratic(c)
        s = _sgn(disc, max(b * b, abs(4 * a * cc)), band)
        if s > 0:
            return Rrmp((1, 1), ())
        if s == 0:
            return Rrmp((2,), ())
        return Rrmp((), (1,))
    if deg == 3:
        a, b, cc, d = c
        disc = disc_cubic(c)
        scale = max(abs(b * b * cc * cc), abs(4 * a * cc**3), abs(4 * b**3 * d),
                    abs(27 * a * a * d * d), abs(18 * a * b * cc * d))
        s = _sgn(disc, scale, band)
        if s > 0:
            return Rrmp((1, 1, 1), ())
        if s < 0:
            return Rrmp((1,), (1,))
        t1 = _sgn(3 * a * cc - b * b, max(abs(3 * a * cc), b * b), band)
        t2 = _sgn(9 * a * d - b * cc, max(abs(9 * a * d), abs(b * cc)), band)
        t3 = _sgn(3 * b * d - cc * cc, max(abs(3 * b * d), cc * cc), band)
        if t1 == t2 == t3 == 0:
            return Rrmp((3,), ())
        return Rrmp((1, 2), ())
    if deg == 4:
        _, _, p, q, r = depress_quartic(c)
        delta, dprime = disc_quartic_depressed(p, q, r)
        s_delta, s_dprime = _quartic_scales(p, q, r)
        coeff_scale = max(abs(p), abs(q), abs(r), 1.0)
        sd = _sgn(delta, s_delta, band)
        sdp = _sgn(dprime, s_dprime, band)
        sp = _sgn(p, coeff_scale, band)
        sq = _sgn(q, coeff_scale, band)
        if sd > 0:
            if sdp > 0 and sp == 0:
                # banded-zero p is chart-ambiguous here; fall back to raw sign
                sp = 1 if p > 0 else (-1 if p < 0 else 0)
            if sdp > 0 and sp < 0:
                return Rrmp((1, 1, 1, 1), ())
            return Rrmp((), (1, 1))
        if sd < 0:
            return Rrmp((1, 1), (1,))
        # delta == 0: some root is repeated
        if sdp > 0:
            return Rrmp((1, 1, 2), ())
        if sdp < 0:
            return Rrmp((2,), (1,))
        # delta == delta' == 0
        if sp < 0:
            return Rrmp((2, 2), ()) if sq == 0 else Rrmp((1, 3), ())
        if sp > 0:
            return Rrmp((), (2,))
        return Rrmp((4,), ())
    raise ValueError(f"sign charts cover degrees 2..4 only, got degree {deg}")


def _discriminant_margin(coeffs) -> float:
    """Relative distance of the discriminant from zero (degree 2..4).

    Used to decide whether an input sits inside the numerical boundary band
    where chart-based and clustering-based classification may differ.
    """
    c = as_filter(coeffs)
    deg = len(c) - 1
    if deg == 2:
        a, b, cc = c
        scale = max(b * b, abs(4 * a * cc))
        value = disc_quadratic(c)
    elif deg == 3:
        a, b, cc, d = c
        scale = max(abs(b * b * cc * cc), abs(4 * a * cc**3), abs(4 * b**3 * d),
                    abs(27 * a * a * d * d), abs(18 * a * b * cc * d))
        value = disc_cubic(c)
    elif deg == 4:
        _, _, p, q, r = depress_quartic(c)
        value, _ = disc_quartic_depressed(p, q, r)
        scale, _ = _quartic_scales(p, q, r)
    else:
        raise ValueError(f"margin defined for degrees 2..4 only, got {deg}")
    if scale == 0:
        return 0.0
    return abs(value) / scale


def discriminant(coeffs) -> float:
    """Discriminant of a binary form of arbitrary degree.

    Vanishes exactly when the form has a repeated projective root.  Computed
    as the resultant of the two partial derivatives (a Sylvester determinant)
    rescaled by a power of the degree; working with the partials rather than
    with a dehomogenized polynomial keeps roots at infinity (leading zero
    coefficients) on the same footing as finite ones.  Normalized to agree
    with ``disc_quadratic``/``disc_cubic`` in low degree.  Degrees <= 1 have
    no root pairs that could collide and return 1.
    """
    c = as_filter(coeffs)
    n = len(c) - 1
    if n <= 1:
        return 1.0
    j = np.arange(n + 1)
    fx = (c * (n - j))[:-1]  # d/dx, degree n-1 in x
    fy = (c * j)[1:]         # d/dy
    m = 2 * (n - 1)
    syl = np.zeros((m, m))
    for i in range(n - 1):
        syl[i, i:i + n] = fx
        syl[n - 1 + i, i:i + n] = fy
    det = float(np.linalg.det(syl))
    sign = -1.0 if (n * (n - 1) // 2) % 2 else 1.0
    return sign * det / float(n) ** (n - 2)


# --- compatibility between a pattern and an architecture --------------------


def is_compatible(rrmp: Rrmp, arch) -> bool:
    """Whether a pattern can split across the layer filters with no repeats.

    Encoded as placing, for each real root, multiplicity-many size-1 balls of
    one color, and for each conjugate pair multiplicity-many size-2 balls of
    one color, into bins of capacities k_i - 1 such that no bin receives two
    balls of the same color.  Patterns of the wrong degree never fit.
    """
    bins = list(arch.bin_sizes)
    if rrmp.degree != sum(bins):
        return False
    colors = [(m, 1) for m in rrmp.rho] + [(m, 2) for m in rrmp.gamma]
    colors.sort(key=lambda t: (-t[1], -t[0]))

    def place(idx, caps):
        if idx == len(colors):
            return True
        count, size = colors[idx]
        eligible = [i for i, cap in enumerate(caps) if cap >= size]
        if len(eligible) < count:
            return False
        for chosen in itertools.combinations(eligible, count):
            nxt = list(caps)
            for i in chosen:
                nxt[i] -= size
            if place(idx + 1, tuple(nxt)):
                return True
        return False

    return place(0, tuple(bins))


def compatible_rrmps(arch, degree: int = None) -> list:
    """All patterns of the given degree compatible with the architecture."""
    if degree is None:
        degree = arch.filter_size - 1
    return [r for r in all_rrmps(degree) if is_compatible(r, arch)]


def all_rrmps(degree: int) -> list:
    """Every pattern of the given degree, lexicographic by label."""
    out = []
    for n_pair in range(degree // 2 + 1):
        n_real = degree - 2 * n_pair
        for rho in _partitions(n_real):
            for gamma in _partitions(n_pair):
                out.append(Rrmp(rho, gamma))
    out.sort(key=lambda r: (r.rho, r.gamma))
    return out


def _partitions(n: int):
    """All integer partitions of n as sorted-ascending tuples (n=0 gives ())."""
    if n == 0:
        yield ()
        return

    def gen(n, max_part):
        if n == 0:
            yield ()
            return
        for first in range(min(n, max_part), 0, -1):
            for rest in gen(n - first, first):
                yield rest + (first,)

    yield from gen(n, n)
