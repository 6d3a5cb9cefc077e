import numpy as np
import pytest

from lcnlab.critlab import (
    _Chart,
    caustic_value,
    cone_critical_points,
    cone_lambda_polynomial,
    cone_region_counts,
    crit_on_stratum,
    critical_points_for_target,
    ed_bound,
    ed_degree,
    expand_stratum_point,
    find_spurious_minimum,
    match_critical_point,
    real_type_splits,
)
from lcnlab.optim import QuadraticObjective
from lcnlab.poly_core import Architecture
from lcnlab.rootlab import INFINITY, ProjRoot, Rrmp

# The palindromic quartic target used throughout: every stratum of its loss
# has known critical points, several of them rational.
U_STAR = np.array([2.0, 0.0, 5.0, 0.0, 2.0])


def test_real_type_splits():
    assert [s.label for s in real_type_splits((2, 1, 1))] == ["112|0", "2|1"]
    assert [s.label for s in real_type_splits((2, 2))] == ["22|0", "0|2"]
    assert [s.label for s in real_type_splits((4,))] == ["4|0"]
    assert [s.label for s in real_type_splits((1, 1, 1, 1))] == ["1111|0", "11|1", "0|11"]
    with pytest.raises(ValueError):
        real_type_splits((2, 0))


def test_chart_jacobian_matches_finite_differences():
    chart = _Chart(rho=(2, 1), gamma=(1,))
    rng = np.random.default_rng(5)
    for _ in range(10):
        params = chart.initial_params(rng, 2.0)
        J = chart.jacobian(params)
        h = 1e-7
        for p in range(chart.n_params):
            bumped = params.copy()
            bumped[p] += h
            up = chart.point(bumped)
            bumped[p] -= 2 * h
            dn = chart.point(bumped)
            assert np.allclose(J[:, p], (up - dn) / (2 * h), atol=1e-5)


def test_expand_stratum_point_rebuilds_rational_critical_point():
    # (1/5)(x+y)^2 (x^2+7xy+y^2) has the double root -1 and two simple real
    # roots; its coefficient vector is one of the catalogued critical points.
    r1 = (-7.0 + np.sqrt(45.0)) / 2.0
    r2 = (-7.0 - np.sqrt(45.0)) / 2.0
    pattern = Rrmp(rho=(1, 1, 2), gamma=())
    w = expand_stratum_point(
        pattern, [ProjRoot(complex(r1)), ProjRoot(complex(r2)), ProjRoot(complex(-1.0))], 0.2
    )
    assert np.allclose(w, [0.2, 1.8, 3.2, 1.8, 0.2], atol=1e-12)


def test_expand_stratum_point_with_infinite_root():
    w = expand_stratum_point(Rrmp(rho=(2,), gamma=(1,)), [INFINITY, ProjRoot(1j * np.sqrt(0.4))], 5.0)
    assert np.allclose(w, [0.0, 0.0, 5.0, 0.0, 2.0], atol=1e-12)


def test_crit_on_stratum_double_plus_singles():
    report = crit_on_stratum(QuadraticObjective.euclidean(U_STAR), (2, 1, 1), seed=0)
    assert report.n_real == 4
    found = sorted(tuple(np.round(p.w, 9)) for p in report.points)
    expected = sorted(
        [
            (0.0, 0.0, 5.0, 0.0, 2.0),
            (2.0, 0.0, 5.0, 0.0, 0.0),
            (0.2, 1.8, 3.2, 1.8, 0.2),
            (0.2, -1.8, 3.2, -1.8, 0.2),
        ]
    )
    for got, want in zip(found, expected):
        assert np.allclose(got, want, atol=1e-9)
    # the two projection points have the conjugate-pair type, the others all-real
    labels = sorted(p.pattern.label for p in report.points)
    assert labels == ["112|0", "112|0", "2|1", "2|1"]


def test_crit_on_stratum_two_double_roots():
    report = crit_on_stratum(QuadraticObjective.euclidean(U_STAR), (2, 2), seed=0)
    assert report.n_real == 5
    rational = [p for p in report.points if p.is_rational()]
    got = sorted(tuple(np.round(p.w, 9)) for p in rational)
    assert np.allclose(got[0], [-1.0, 0.0, 2.0, 0.0, -1.0], atol=1e-9)
    assert np.allclose(got[1], [0.0, 0.0, 5.0, 0.0, 0.0], atol=1e-9)
    assert np.allclose(got[2], [7 / 3, 0.0, 14 / 3, 0.0, 7 / 3], atol=1e-9)


def test_crit_on_stratum_quadruple_root():
    report = crit_on_stratum(QuadraticObjective.euclidean(U_STAR), (4,), seed=0)
    assert report.n_real == 4
    ws = sorted((tuple(np.round(p.w, 9)) for p in report.points), key=lambda w: (w[0], w[1]))
    assert np.allclose(ws[0], [0.0, 0.0, 0.0, 0.0, 2.0], atol=1e-9)
    # the symmetric pair 17/35 (x +- y)^4
    assert np.allclose(ws[1], [17 / 35, -68 / 35, 102 / 35, -68 / 35, 17 / 35], atol=1e-9)
    assert np.allclose(ws[2], [17 / 35, 68 / 35, 102 / 35, 68 / 35, 17 / 35], atol=1e-9)
    assert np.allclose(ws[3], [2.0, 0.0, 0.0, 0.0, 0.0], atol=1e-9)


def test_crit_on_stratum_rejects_bad_partition():
    with pytest.raises(ValueError):
        crit_on_stratum(QuadraticObjective.euclidean(U_STAR), (3, 2))


def test_critical_points_for_target_respects_architecture():
    # two bins of sizes (3, 1): a triple or quadruple root needs more bins,
    # and a pair of double roots does not fit either
    reports = critical_points_for_target(U_STAR, Architecture((4, 2)), n_starts=120, seed=1)
    assert [r.lam for r in reports] == [(2, 1, 1)]
    # (3,2,2) can realize a pair of double roots and a triple root, but a
    # quadruple root would need four layers
    reports = critical_points_for_target(U_STAR, Architecture((3, 2, 2)), n_starts=60, seed=1)
    assert sorted(r.lam for r in reports) == [(2, 1, 1), (2, 2), (3, 1)]


def test_match_critical_point():
    reports = critical_points_for_target(U_STAR, Architecture((4, 2)), n_starts=120, seed=0)
    hit = match_critical_point(np.array([2.0, 1e-6, 5.0, -1e-6, 1e-6]), reports)
    assert hit is not None and np.allclose(hit.w, [2.0, 0.0, 5.0, 0.0, 0.0], atol=1e-9)
    assert match_critical_point(np.array([1.0, 1.0, 1.0, 1.0, 1.0]), reports) is None


def test_cone_lambda_polynomial_identity_gram():
    rng = np.random.default_rng(7)
    for _ in range(20):
        u1, u2, u3 = rng.standard_normal(3)
        quartic, _, _, _ = cone_lambda_polynomial(np.eye(3), np.array([u1, u2, u3]))
        expected = np.array(
            [
                u2**2 - u1 * u3,
                -(u1**2) - 4 * u1 * u3 - u3**2,
                -4 * u1**2 - 2 * u2**2 - 5 * u1 * u3 - 4 * u3**2,
                -4 * u1**2 - 4 * u1 * u3 - 4 * u3**2,
                u2**2 - 4 * u1 * u3,
            ]
        )
        assert np.max(np.abs(quartic - expected)) <= 1e-12 * np.max(np.abs(expected))


def test_cone_lambda_polynomial_weighted_gram_divisibility():
    # with the weighted Gram diag(1, 1/2, 1) the multiplier polynomial always
    # contains the factor (lam + 1)^2, leaving a quadratic
    sigma = np.diag([1.0, 0.5, 1.0])
    rng = np.random.default_rng(11)
    for _ in range(10):
        u = rng.standard_normal(3)
        quartic, _, _, _ = cone_lambda_polynomial(sigma, sigma @ u)
        _, rem = np.polydiv(quartic, np.array([1.0, 2.0, 1.0]))
        assert np.max(np.abs(rem)) <= 1e-10 * np.max(np.abs(quartic))


def test_cone_lambda_polynomial_rejects_bad_shape():
    with pytest.raises(ValueError):
        cone_lambda_polynomial(np.eye(4), np.ones(4))


def test_cone_critical_points_project_onto_cone():
    rng = np.random.default_rng(13)
    for _ in range(10):
        u = rng.standard_normal(3)
        points = cone_critical_points(u)
        assert points, "a projection onto the cone always exists"
        for p in points:
            disc = p.w[1] ** 2 - 4.0 * p.w[0] * p.w[2]
            assert abs(disc) <= 1e-6 * max(1.0, np.max(np.abs(p.w)) ** 2)
            # criticality: residual must be parallel to the cone normal J w
            normal = np.array([p.w[2], -0.5 * p.w[1], p.w[0]])
            resid = p.w - u
            cross = resid - (resid @ normal) / (normal @ normal) * normal
            assert np.linalg.norm(cross) <= 1e-6 * (1.0 + np.linalg.norm(resid))
        losses = [p.loss for p in points]
        assert losses == sorted(losses)


def test_cone_region_counts_across_sample_targets():
    # three targets on the palindromic slice, one per landscape regime
    assert cone_region_counts(np.array([0.5, 0.10, 0.5])) == (2, 2)
    assert cone_region_counts(np.array([0.5, 0.35, 0.5])) == (1, 1)
    assert cone_region_counts(np.array([0.5, 0.60, 0.5])) == (2, 0)


def test_caustic_value_signs():
    assert caustic_value(np.array([0.5, 0.10, 0.5])) < 0
    assert caustic_value(np.array([0.5, 0.35, 0.5])) > 0
    assert caustic_value(np.array([0.5, 0.60, 0.5])) > 0


def test_ed_degree_tables():
    quartic_strata = [(2, 1, 1), (2, 2), (3, 1), (4,)]
    assert [ed_degree(lam, 4) for lam in quartic_strata] == [10, 13, 12, 10]
    assert [ed_degree(lam, 4, metric="special") for lam in quartic_strata] == [4, 7, 4, 4]
    # discriminant hypersurface in any degree: 3(k-1) - 2 generically
    assert ed_degree((2, 1, 1, 1), 5) == 13
    assert ed_degree((2,), 2) == 4
    assert ed_degree((1, 1, 1), 3) == 1


def test_ed_degree_errors():
    with pytest.raises(ValueError):
        ed_degree((2, 2), 5)
    with pytest.raises(ValueError):
        ed_degree((2, 2, 1), 5)  # no closed form
    with pytest.raises(ValueError):
        ed_degree((2, 2), 4, metric="fancy")


def test_ed_bound():
    assert ed_bound(Architecture((3, 2, 2))) == 36
    assert ed_bound(Architecture((4, 2))) == 11


def test_find_spurious_minimum_matches_exact_point():
    # the (2,3) architecture is filling, yet its parameterized loss has a
    # strict non-global minimum; coordinates certified by exact-rational
    # Newton refinement.
    u = np.array([1.0, 1.0, 0.1, 0.1])
    sm = find_spurious_minimum(u, Architecture((2, 3)), n_starts=150, seed=0)
    exact = np.array(
        [0.0578445443253357, 1.0000187822593627, 0.9418296668754089, 0.0511336537590084]
    )
    assert np.max(np.abs(sm.chart - exact)) <= 1e-9
    assert sm.loss > 1e-3
    assert np.min(sm.hessian_eigs) > 0
    assert sm.grad_norm <= 1e-10
    # the composed filter factors the first filter out of the target's basin
    assert np.allclose(sm.w, np.convolve(sm.theta[0], sm.theta[1]), atol=1e-12)


def test_find_spurious_minimum_rejects_mismatched_sizes():
    with pytest.raises(ValueError):
        find_spurious_minimum(np.ones(4), Architecture((2, 2)))
