"""Kernel matrices, factorization, interpolation, and fill distance."""

import numpy as np
import pytest

from koopwend.domain import BoxDomain
from koopwend.dynamics import design_grid
from koopwend.errors import FactorizationError
from koopwend.interpolation import (
    CenterSet,
    assemble_matrix,
    evaluate,
    extension_norm_bound,
    factorize,
    fill_distance,
    gram_factorization,
    interpolate,
    kernel_apply,
    native_norm_sq,
    project,
)
from koopwend.wendland import build_wendland


@pytest.fixture(scope="module")
def k21():
    return build_wendland(2, 1)


@pytest.fixture(scope="module")
def k31():
    return build_wendland(3, 1)


def random_centers(rng, n, dim, lo=-1.0, hi=1.0, min_sep=0.05):
    """Rejection-sample a pairwise-separated random center set."""
    pts = [rng.uniform(lo, hi, dim)]
    while len(pts) < n:
        cand = rng.uniform(lo, hi, dim)
        if min(np.linalg.norm(cand - p) for p in pts) >= min_sep:
            pts.append(cand)
    return CenterSet(np.array(pts))


class TestCenterSet:
    def test_rejects_near_duplicates(self):
        with pytest.raises(ValueError, match="near-duplicate"):
            CenterSet(np.array([[0.0, 0.0], [1e-13, 0.0], [1.0, 0.0]]))

    def test_separation_cached(self):
        X = CenterSet(np.array([[0.0, 0.0], [0.3, 0.4], [2.0, 0.0]]))
        assert X.separation == pytest.approx(0.5)

    def test_single_point(self):
        X = CenterSet(np.array([[1.0, 2.0]]))
        assert len(X) == 1 and X.separation == np.inf

    def test_domain_containment_enforced(self):
        box = BoxDomain((-1, -1), (1, 1))
        with pytest.raises(ValueError, match="outside"):
            CenterSet(np.array([[0.0, 0.0], [2.0, 0.0]]), domain=box)

    def test_points_immutable(self):
        X = CenterSet(np.array([[0.0, 0.0], [1.0, 0.0]]))
        with pytest.raises(ValueError):
            X.points[0, 0] = 5.0


class TestAssembleMatrix:
    def test_single_center(self, k31):
        X = CenterSet(np.zeros((1, 3)))
        K = assemble_matrix(k31, X, X)
        assert K.shape == (1, 1)
        assert K[0, 0] == pytest.approx(k31.diag, rel=1e-15)

    def test_distant_pair_is_diagonal(self, k21):
        X = CenterSet(np.array([[0.0, 0.0], [3.0, 0.0]]))
        K = assemble_matrix(k21, X, X)
        assert np.allclose(K, k21.diag * np.eye(2), rtol=0, atol=0)

    def test_frozen_two_point_matrix(self, k31):
        X = CenterSet(np.array([[0, 0, 0], [0.5, 0, 0]], dtype=float))
        K = assemble_matrix(k31, X, X)
        expected = np.array([[0.05, 0.009375], [0.009375, 0.05]])
        np.testing.assert_allclose(K, expected, rtol=1e-14)

    def test_exact_symmetry(self, k21):
        rng = np.random.default_rng(3)
        for n in (5, 17, 40):
            X = random_centers(rng, n, 2)
            K = assemble_matrix(k21, X, X)
            assert (K == K.T).all()

    def test_rectangular_shape_and_chunking(self, k21):
        rng = np.random.default_rng(4)
        Z = rng.uniform(-1, 1, (37, 2))
        X = random_centers(rng, 11, 2)
        K = assemble_matrix(k21, Z, X)
        assert K.shape == (37, 11)
        brute = np.array(
            [[float(np.linalg.norm(z - x)) for x in X.points] for z in Z]
        )
        from koopwend.wendland import eval_phi

        np.testing.assert_allclose(K, eval_phi(k21, brute), rtol=0, atol=1e-14)

    def test_dimension_mismatch(self, k31):
        with pytest.raises(ValueError):
            assemble_matrix(k31, np.zeros((2, 2)), np.zeros((2, 3)))


class TestFactorize:
    def test_identity(self):
        fact = factorize(np.eye(4))
        assert fact.jitter_used == 0.0
        np.testing.assert_allclose(fact.factor, np.eye(4))

    def test_well_separated_no_jitter(self, k21):
        rng = np.random.default_rng(5)
        X = random_centers(rng, 12, 2, min_sep=0.2)
        fact = gram_factorization(k21, X)
        assert fact.jitter_used == 0.0

    def test_indefinite_fails_with_separation_report(self, k21):
        X = CenterSet(np.array([[0.0, 0.0], [0.25, 0.0]]))
        K = np.array([[1.0, 2.0], [2.0, 1.0]])  # eigenvalues 3 and -1
        with pytest.raises(FactorizationError, match="separation"):
            factorize(K, kernel=k21, centers=X)

    def test_reconstruction_invariant(self, k21):
        rng = np.random.default_rng(6)
        X = random_centers(rng, 25, 2)
        fact = gram_factorization(k21, X)
        recon = fact.factor @ fact.factor.T
        target = fact.matrix + fact.jitter_used * np.eye(fact.n)
        err = np.linalg.norm(recon - target) / np.linalg.norm(target)
        assert err < 1e-10

    def test_inplace_path_matches(self, k21):
        rng = np.random.default_rng(7)
        X = random_centers(rng, 30, 2)
        f1 = gram_factorization(k21, X, keep_matrix=True)
        f2 = gram_factorization(k21, X, keep_matrix=False)
        assert f2.matrix is None
        rhs = rng.standard_normal(30)
        np.testing.assert_allclose(f1.solve(rhs), f2.solve(rhs), atol=1e-13)

    def test_spd_50_random_sets(self, k21):
        rng = np.random.default_rng(8)
        for _ in range(50):
            n = int(rng.integers(2, 21))
            X = random_centers(rng, n, 2, min_sep=0.02)
            fact = gram_factorization(k21, X)
            assert fact.jitter_used == 0.0
            assert np.all(np.diag(fact.factor) > 0)


class TestInterpolate:
    def test_zero_values(self, k21):
        rng = np.random.default_rng(9)
        fact = gram_factorization(k21, random_centers(rng, 8, 2))
        interp = interpolate(fact, np.zeros(8))
        np.testing.assert_allclose(interp.alpha, 0.0)

    def test_forward_inverse(self, k21):
        rng = np.random.default_rng(10)
        X = random_centers(rng, 9, 2)
        fact = gram_factorization(k21, X)
        e1 = np.eye(9)[0]
        interp = interpolate(fact, fact.matrix @ e1)
        np.testing.assert_allclose(interp.alpha, e1, atol=1e-9)

    def test_distant_pair_diagonal_solve(self, k21):
        X = CenterSet(np.array([[0.0, 0.0], [5.0, 0.0]]))
        fact = gram_factorization(k21, X)
        interp = interpolate(fact, np.array([2.0, -3.0]))
        np.testing.assert_allclose(interp.alpha, np.array([2.0, -3.0]) / k21.diag, rtol=1e-14)

    def test_residual_invariant(self, k21):
        rng = np.random.default_rng(11)
        for _ in range(10):
            X = random_centers(rng, 20, 2)
            fact = gram_factorization(k21, X)
            values = rng.standard_normal(20)
            interp = interpolate(fact, values)
            resid = np.linalg.norm(fact.matrix @ interp.alpha - values, np.inf)
            assert resid < 1e-8 * np.linalg.norm(values, np.inf)

    def test_wrong_length(self, k21):
        rng = np.random.default_rng(12)
        fact = gram_factorization(k21, random_centers(rng, 6, 2))
        with pytest.raises(ValueError):
            interpolate(fact, np.zeros(5))


class TestEvaluate:
    def test_exactness_at_centers(self, k21):
        rng = np.random.default_rng(13)
        for _ in range(10):
            X = random_centers(rng, 15, 2)
            fact = gram_factorization(k21, X)
            values = rng.standard_normal(15)
            interp = interpolate(fact, values)
            err = np.max(np.abs(evaluate(interp, X) - values))
            assert err < 1e-8 * (1 + np.linalg.norm(values, np.inf))

    def test_compact_support_far_away(self, k21):
        X = CenterSet(np.array([[0.0, 0.0], [0.5, 0.0]]))
        interp = interpolate(gram_factorization(k21, X), np.array([1.0, 2.0]))
        assert evaluate(interp, np.array([[4.0, 4.0]]))[0] == 0.0

    def test_canonical_feature_column(self, k21):
        rng = np.random.default_rng(14)
        X = random_centers(rng, 7, 2)
        fact = gram_factorization(k21, X)
        interp = interpolate(fact, fact.matrix[:, 2])  # values of the feature at x_2
        Z = rng.uniform(-1, 1, (9, 2))
        expected = assemble_matrix(k21, Z, X)[:, 2]
        np.testing.assert_allclose(evaluate(interp, Z), expected, atol=1e-10)

    def test_kernel_apply_matches_assemble(self, k21):
        rng = np.random.default_rng(15)
        X = random_centers(rng, 23, 2)
        Z = rng.uniform(-1, 1, (64, 2))
        B = rng.standard_normal((23, 3))
        np.testing.assert_allclose(
            kernel_apply(k21, Z, X, B), assemble_matrix(k21, Z, X) @ B, atol=1e-13
        )


class TestProject:
    def test_fixes_canonical_feature(self, k21):
        rng = np.random.default_rng(16)
        X = random_centers(rng, 8, 2)
        fact = gram_factorization(k21, X)

        def feature(pts):
            return assemble_matrix(k21, pts, X)[:, 0]

        interp = project(fact, feature)
        np.testing.assert_allclose(interp.alpha, np.eye(8)[0], atol=1e-9)

    def test_zero_function(self, k21):
        rng = np.random.default_rng(17)
        fact = gram_factorization(k21, random_centers(rng, 8, 2))
        interp = project(fact, lambda pts: np.zeros(len(pts)))
        np.testing.assert_allclose(interp.alpha, 0.0)

    def test_idempotence(self, k21):
        rng = np.random.default_rng(18)
        for _ in range(5):
            X = random_centers(rng, 14, 2)
            fact = gram_factorization(k21, X)
            first = project(fact, lambda pts: np.sin(pts[:, 0]) * np.cos(pts[:, 1]))
            second = project(fact, lambda pts: evaluate(first, pts))
            assert np.max(np.abs(first.alpha - second.alpha)) < 1e-8

    def test_evaluation_failure_propagates(self, k21):
        rng = np.random.default_rng(19)
        fact = gram_factorization(k21, random_centers(rng, 5, 2))

        def broken(pts):
            raise RuntimeError("sensor offline")

        with pytest.raises(RuntimeError, match="sensor offline"):
            project(fact, broken)


class TestNativeNorm:
    def test_zero(self, k21):
        rng = np.random.default_rng(20)
        fact = gram_factorization(k21, random_centers(rng, 6, 2))
        assert native_norm_sq(interpolate(fact, np.zeros(6))) == 0.0

    def test_single_center_closed_form(self, k31):
        X = CenterSet(np.zeros((1, 3)))
        interp = interpolate(gram_factorization(k31, X), np.array([3.0]))
        assert native_norm_sq(interp) == pytest.approx(9.0 / k31.diag, rel=1e-12)

    def test_quadratic_form_identity(self, k21):
        rng = np.random.default_rng(21)
        for _ in range(10):
            X = random_centers(rng, 12, 2)
            fact = gram_factorization(k21, X)
            interp = interpolate(fact, rng.standard_normal(12))
            quad = interp.alpha @ fact.matrix @ interp.alpha
            assert native_norm_sq(interp) == pytest.approx(quad, rel=1e-8)


class TestExtensionNormBound:
    def test_separated_centers(self, k21):
        X = CenterSet(np.array([[0.0, 0.0], [5.0, 0.0], [0.0, 5.0]]))
        bound = extension_norm_bound(gram_factorization(k21, X))
        assert bound == pytest.approx(np.sqrt(3 / k21.diag), rel=1e-12)

    def test_single_center(self, k31):
        bound = extension_norm_bound(gram_factorization(k31, CenterSet(np.zeros((1, 3)))))
        assert bound == pytest.approx(1 / np.sqrt(k31.diag), rel=1e-12)

    def test_two_separated_d3(self, k31):
        X = CenterSet(np.array([[0, 0, 0], [2, 0, 0]], dtype=float))
        bound = extension_norm_bound(gram_factorization(k31, X))
        assert bound == pytest.approx(np.sqrt(2 / 0.05), rel=1e-12)


class TestBestApproximation:
    def test_projection_minimizes_native_norm(self, k21):
        rng = np.random.default_rng(22)
        for _ in range(5):
            X = random_centers(rng, 10, 2)
            W = random_centers(rng, 5, 2, lo=-0.9, hi=0.9)
            # ambient set X united with W (drop W points too close to X)
            keep = [
                w for w in W.points
                if min(np.linalg.norm(w - x) for x in X.points) > 0.05
            ]
            U = CenterSet(np.vstack([X.points, keep]))
            fact_U = gram_factorization(k21, U)
            fact_X = gram_factorization(k21, X)
            alpha_f = rng.standard_normal(len(U))
            f_values_U = fact_U.matrix @ alpha_f
            f_at_X = f_values_U[: len(X)]
            sx = interpolate(fact_X, f_at_X)
            pad = np.concatenate([sx.alpha, np.zeros(len(U) - len(X))])

            def norm_sq_against(beta_X):
                diff = alpha_f - np.concatenate([beta_X, np.zeros(len(U) - len(X))])
                return diff @ fact_U.matrix @ diff

            best = (alpha_f - pad) @ fact_U.matrix @ (alpha_f - pad)
            for _ in range(20):
                competitor = sx.alpha + rng.standard_normal(len(X))
                assert best <= norm_sq_against(competitor) + 1e-8


class TestFillDistance:
    def test_single_center_square(self):
        box = BoxDomain((-1, -1), (1, 1))
        X = CenterSet(np.array([[0.0, 0.0]]))
        fd = fill_distance(X, box, probe_resolution=0.02)
        assert fd == pytest.approx(np.sqrt(2), abs=0.02 * np.sqrt(2))

    def test_uniform_grid_cell_centers(self):
        box = BoxDomain((0, 0), (1, 1))
        grid = design_grid(box, 0.25, mode="spacing")
        fd = fill_distance(grid.nodes(), box, probe_resolution=0.01)
        assert fd == pytest.approx(0.25 * np.sqrt(2) / 2, abs=0.02)

    def test_dense_centers_bounded_by_probe(self):
        box = BoxDomain((0, 0), (1, 1))
        grid = design_grid(box, 0.05, mode="spacing")
        fd = fill_distance(grid.nodes(), box, probe_resolution=0.2)
        assert fd <= 0.2 * np.sqrt(2)

    def test_empty_and_bad_resolution(self):
        box = BoxDomain((0, 0), (1, 1))
        X = CenterSet(np.array([[0.5, 0.5]]))
        with pytest.raises(ValueError):
            fill_distance(X, box, probe_resolution=0.0)


class TestInterpolationConvergence:
    def test_feature_interpolation_rate(self, k21):
        # off-grid kernel section; sup error between resolutions 0.2 and 0.05
        # must decay with log2-rate at least k + 0.4
        box = BoxDomain((-1, -1), (1, 1))
        center = np.array([[0.12345, -0.05678]])
        errors = {}
        for h in (0.2, 0.05):
            grid = design_grid(box, h, mode="fill")
            X = grid.nodes()
            fact = gram_factorization(k21, X)
            feat = lambda pts: assemble_matrix(k21, pts, center)[:, 0]
            interp = project(fact, feat)
            V = grid.cell_centers()
            errors[h] = np.max(np.abs(evaluate(interp, V) - feat(V.points)))
        rate = np.log2(errors[0.2] / errors[0.05]) / np.log2(0.2 / 0.05)
        assert rate >= 1 + 0.4
