import math

import numpy as np
import pytest

from qntk_diagnostics import models, qntk, training
from qntk_diagnostics.errors import SingularKernelError, StructuralError


def naive_kernel(model, theta, inputs):
    """Explicit sum over parameters of gradient products, merged point-major index."""
    jacs = [models.model_gradient(model, x, theta) for x in np.atleast_2d(inputs)]
    m, c, p = len(jacs), model.config.n_outputs, model.param_count
    out = np.zeros((m * c, m * c))
    for i in range(m):
        for j in range(c):
            for ii in range(m):
                for jj in range(c):
                    acc = 0.0
                    for l in range(p):
                        acc += jacs[i][j, l] * jacs[ii][jj, l]
                    out[i * c + j, ii * c + jj] = acc
    return out


def charpoly_eigvals_3x3(mat):
    """Eigenvalues of a symmetric 3x3 matrix by bisection on the characteristic
    polynomial, independent of any matrix eigensolver."""

    def det(lam):
        a = mat - lam * np.eye(3)
        return (
            a[0, 0] * (a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1])
            - a[0, 1] * (a[1, 0] * a[2, 2] - a[1, 2] * a[2, 0])
            + a[0, 2] * (a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0])
        )

    bound = float(np.max(np.abs(mat))) * 3 + 1.0
    grid = np.linspace(-bound, bound, 20001)
    values = [det(g) for g in grid]
    roots = []
    for lo, hi, flo, fhi in zip(grid, grid[1:], values, values[1:]):
        if flo == 0.0:
            roots.append(lo)
        elif flo * fhi < 0:
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                fm = det(mid)
                if flo * fm <= 0:
                    hi = mid
                else:
                    lo, flo = mid, fm
            roots.append(0.5 * (lo + hi))
    return sorted(roots)


@pytest.fixture(scope="module")
def small_model():
    cfg = models.ModelConfig(n_qubits=3, layers=4, encoding="high_freq", ansatz="HEA")
    return models.build_model(cfg)


class TestKernelMatrix:
    def test_single_point_is_gradient_norm(self, small_model):
        theta = training.initial_parameters(small_model.param_count, 0)
        bundle = qntk.kernel_matrix(small_model, theta, [[0.2]])
        jac = models.model_gradient(small_model, 0.2, theta)
        assert bundle.matrix[0, 0] == pytest.approx(float(jac[0] @ jac[0]), abs=1e-12)
        assert bundle.matrix[0, 0] >= 0

    def test_duplicated_point_gives_identical_rows(self, small_model):
        theta = training.initial_parameters(small_model.param_count, 1)
        bundle = qntk.kernel_matrix(small_model, theta, [[0.3], [0.3]])
        assert np.max(np.abs(bundle.matrix[0] - bundle.matrix[1])) < 1e-12
        assert abs(bundle.eigenvalues[0]) < 1e-10 * bundle.eigenvalues[-1]

    def test_matches_naive_double_loop(self, small_model):
        theta = training.initial_parameters(small_model.param_count, 2)
        xs = np.linspace(-0.8, 0.8, 5).reshape(-1, 1)
        bundle = qntk.kernel_matrix(small_model, theta, xs)
        assert np.max(np.abs(bundle.matrix - naive_kernel(small_model, theta, xs))) < 1e-12

    def test_symmetry_and_psd(self, small_model):
        theta = training.initial_parameters(small_model.param_count, 3)
        bundle = qntk.kernel_matrix(small_model, theta, np.linspace(-1, 1, 4).reshape(-1, 1))
        k = bundle.matrix
        assert np.max(np.abs(k - k.T)) < 1e-12
        assert bundle.eigenvalues[0] >= -1e-10 * bundle.eigenvalues[-1]


class TestCrossKernel:
    def test_test_equals_train(self, small_model):
        theta = training.initial_parameters(small_model.param_count, 4)
        xs = np.linspace(-0.5, 0.5, 3).reshape(-1, 1)
        bundle = qntk.kernel_matrix(small_model, theta, xs)
        cross = qntk.cross_kernel(small_model, theta, xs, xs)
        assert np.max(np.abs(cross - bundle.matrix)) < 1e-12

    def test_duplicate_test_point_copies_row(self, small_model):
        theta = training.initial_parameters(small_model.param_count, 5)
        xs = np.linspace(-0.5, 0.5, 3).reshape(-1, 1)
        bundle = qntk.kernel_matrix(small_model, theta, xs)
        cross = qntk.cross_kernel(small_model, theta, xs[:1], xs)
        assert np.max(np.abs(cross[0] - bundle.matrix[0])) < 1e-10

    def test_matches_naive_products(self, small_model):
        theta = training.initial_parameters(small_model.param_count, 6)
        train = np.linspace(-0.9, 0.9, 4).reshape(-1, 1)
        test = np.array([[0.05], [-0.66]])
        cross = qntk.cross_kernel(small_model, theta, test, train)
        jt = [models.model_gradient(small_model, x, theta) for x in test]
        jr = [models.model_gradient(small_model, x, theta) for x in train]
        for g in range(2):
            for i in range(4):
                assert cross[g, i] == pytest.approx(float(jt[g][0] @ jr[i][0]), abs=1e-12)


class TestEigSym:
    def test_diagonal(self):
        w, a = qntk.eig_sym(np.diag([2.0, 1.0]))
        assert np.allclose(w, [1.0, 2.0])
        assert np.allclose(np.abs(a), np.eye(2)[::-1])

    def test_pauli_x_matrix(self):
        w, _ = qntk.eig_sym(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert np.allclose(w, [-1.0, 1.0], atol=1e-14)

    def test_random_gram_reconstruction(self):
        rng = np.random.default_rng(7)
        g = rng.normal(size=(10, 14))
        k = g @ g.T
        w, a = qntk.eig_sym(k)
        assert np.all(np.diff(w) >= 0)
        assert np.max(np.abs(a.T @ np.diag(w) @ a - k)) < 1e-9 * max(1.0, w[-1])
        assert np.max(np.abs(a @ a.T - np.eye(10))) < 1e-10

    def test_three_by_three_against_charpoly_bisection(self):
        rng = np.random.default_rng(8)
        g = rng.normal(size=(3, 5))
        k = g @ g.T
        w, _ = qntk.eig_sym(k)
        ref = charpoly_eigvals_3x3(k)
        assert np.max(np.abs(w - ref)) < 1e-8

    def test_asymmetric_rejected(self):
        with pytest.raises(StructuralError):
            qntk.eig_sym(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestDiagnostics:
    def test_arithmetic_from_spectrum(self):
        bundle = qntk.bundle_from_matrix(np.diag([1.0, 4.0]))
        d = qntk.diagnostics(bundle)
        assert d.eta_crit == pytest.approx(0.5)
        assert d.kappa == pytest.approx(4.0)
        assert d.tau == pytest.approx(8.0)
        assert d.tau == 2.0 * d.kappa
        assert d.eta_crit * d.lambda_max == 2.0

    def test_degenerate_spectrum(self):
        d = qntk.diagnostics(qntk.bundle_from_matrix(np.diag([3.0, 3.0])))
        assert d.kappa == pytest.approx(1.0)
        assert d.tau == pytest.approx(2.0)

    def test_rank_deficient_uses_retained_spectrum(self):
        # sub-cutoff eigenvalue is dropped; kappa reflects the retained part
        d = qntk.diagnostics(qntk.bundle_from_matrix(np.diag([1e-15, 2.0]), cutoff_rel=1e-10))
        assert d.lambda_min == pytest.approx(2.0)
        assert d.kappa == pytest.approx(1.0)

    def test_all_below_cutoff_is_singular(self):
        bundle = qntk.bundle_from_matrix(np.diag([1.0, 2.0]), cutoff_rel=1.5)
        with pytest.raises(SingularKernelError):
            qntk.diagnostics(bundle)

    def test_zero_kernel_is_singular(self):
        with pytest.raises(SingularKernelError):
            qntk.diagnostics(qntk.bundle_from_matrix(np.zeros((2, 2))))


class TestRegularizedInverse:
    def test_diagonal(self):
        bundle = qntk.bundle_from_matrix(np.diag([2.0, 4.0]))
        assert np.allclose(qntk.regularized_inverse(bundle), np.diag([0.5, 0.25]), atol=1e-14)

    def test_rank_one_pseudo_inverse(self):
        k = np.ones((2, 2))
        inv = qntk.regularized_inverse(qntk.bundle_from_matrix(k))
        assert np.max(np.abs(inv - 0.25 * np.ones((2, 2)))) < 1e-12

    def test_pseudo_inverse_identity(self):
        rng = np.random.default_rng(9)
        g = rng.normal(size=(8, 12))
        k = g @ g.T
        bundle = qntk.bundle_from_matrix(k)
        inv = qntk.regularized_inverse(bundle)
        assert np.max(np.abs(k @ inv @ k - k)) < 1e-9

    def test_all_below_cutoff(self):
        with pytest.raises(SingularKernelError):
            qntk.regularized_inverse(qntk.bundle_from_matrix(np.diag([1.0, 2.0])), cutoff_rel=2.0)


class TestInferenceMap:
    def test_identity_on_training_set(self, small_model):
        theta = training.initial_parameters(small_model.param_count, 10)
        xs = np.linspace(-0.7, 0.7, 4).reshape(-1, 1)
        bundle = qntk.kernel_matrix(small_model, theta, xs)
        mapping = qntk.inference_map(bundle.matrix, bundle.inverse)
        assert np.max(np.abs(mapping - np.eye(4))) < 1e-8

    def test_unit_kernel_returns_cross(self):
        cross = np.array([[0.3, -0.2], [0.7, 0.1]])
        assert np.array_equal(qntk.inference_map(cross, np.eye(2)), cross)

    def test_map_times_kernel_recovers_cross(self):
        rng = np.random.default_rng(11)
        g_train = rng.normal(size=(5, 9))
        g_test = rng.normal(size=(3, 9))
        k = g_train @ g_train.T
        cross = g_test @ g_train.T
        bundle = qntk.bundle_from_matrix(k)
        mapping = qntk.inference_map(cross, bundle.inverse)
        assert np.max(np.abs(mapping @ k - cross)) < 1e-9

    def test_shape_mismatch(self):
        with pytest.raises(StructuralError):
            qntk.inference_map(np.ones((2, 3)), np.eye(2))


class TestPredictors:
    def test_time_zero_is_zero(self):
        bundle = qntk.bundle_from_matrix(np.diag([1.0, 2.0]))
        pred = qntk.predict_at_time(bundle.matrix, bundle, [1.0, 1.0], eta=0.5, t=0.0)
        assert np.array_equal(pred, [0.0, 0.0])

    def test_long_time_matches_infinite(self):
        rng = np.random.default_rng(12)
        g = rng.normal(size=(4, 8))
        bundle = qntk.bundle_from_matrix(g @ g.T)
        y = rng.normal(size=4)
        eta = 0.01
        t = 41.0 / (eta * bundle.eigenvalues[0])
        at_t = qntk.predict_at_time(bundle.matrix, bundle, y, eta, t)
        inf = qntk.predict_infinite(bundle.matrix, bundle.inverse, y)
        assert np.max(np.abs(at_t - inf)) < 1e-12

    def test_diagonal_scalar_exponentials(self):
        # independent oracle: per-mode 1 - exp(-eta * lambda * t)
        bundle = qntk.bundle_from_matrix(np.diag([1.0, 2.0]))
        pred = qntk.predict_at_time(bundle.matrix, bundle, [1.0, 1.0], eta=0.1, t=1.0)
        expected = [1.0 - math.exp(-0.1), 1.0 - math.exp(-0.2)]
        assert pred == pytest.approx(expected, abs=1e-12)
        assert pred[0] == pytest.approx(0.09516, abs=5e-6)
        assert pred[1] == pytest.approx(0.18127, abs=5e-6)

    def test_infinite_reproduces_training_labels(self, small_model):
        theta = training.initial_parameters(small_model.param_count, 13)
        xs = np.linspace(-0.9, 0.9, 5).reshape(-1, 1)
        bundle = qntk.kernel_matrix(small_model, theta, xs)
        y = np.sin(np.pi * xs[:, 0])
        pred = qntk.predict_infinite(bundle.matrix, bundle.inverse, y)
        assert np.max(np.abs(pred - y)) < 1e-8

    def test_zero_labels_zero_predictions(self):
        bundle = qntk.bundle_from_matrix(np.diag([1.0, 3.0]))
        assert np.array_equal(
            qntk.predict_infinite(bundle.matrix, bundle.inverse, [0.0, 0.0]), [0.0, 0.0]
        )

    def test_duplicate_point_predictions_agree(self, small_model):
        theta = training.initial_parameters(small_model.param_count, 14)
        xs = np.array([[0.25], [0.25], [-0.5]])
        bundle = qntk.kernel_matrix(small_model, theta, xs)
        pred = qntk.predict_infinite(bundle.matrix, bundle.inverse, [0.4, 0.4, -0.1])
        assert pred[0] == pytest.approx(pred[1], abs=1e-9)


class TestErrorTrajectory:
    def test_zero_steps(self):
        bundle = qntk.bundle_from_matrix(np.array([[2.0, 0.3], [0.3, 1.0]]))
        eps0 = np.array([0.5, -0.2])
        assert qntk.error_trajectory(bundle, 0.1, eps0, 0) == pytest.approx(eps0, abs=1e-12)

    def test_critical_rate_flips_top_component(self):
        bundle = qntk.bundle_from_matrix(np.diag([1.0, 4.0]))
        eta = 0.5  # 2 / lambda_max
        eps0 = np.array([0.0, 1.0])
        for t in range(1, 4):
            traj = qntk.error_trajectory(bundle, eta, eps0, t)
            assert traj[1] == pytest.approx((-1.0) ** t, abs=1e-12)

    def test_ten_times_critical_grows_by_19(self):
        bundle = qntk.bundle_from_matrix(np.diag([1.0, 4.0]))
        eta = 10 * 0.5
        eps0 = np.array([0.0, 1.0])
        one = qntk.error_trajectory(bundle, eta, eps0, 1)
        assert abs(one[1]) == pytest.approx(19.0, abs=1e-10)

    def test_continuous_discrete_agree_for_small_steps(self):
        rng = np.random.default_rng(15)
        g = rng.normal(size=(4, 6))
        k = g @ g.T
        bundle = qntk.bundle_from_matrix(k)
        eta = 0.1 / bundle.eigenvalues[-1]  # eta * lambda_max = 0.1
        y = rng.normal(size=4)
        for t in (1, 5, 20):
            discrete = y + qntk.error_trajectory(bundle, eta, -y, t)
            continuous = qntk.predict_at_time(bundle.matrix, bundle, y, eta, float(t))
            assert np.max(np.abs(discrete - continuous)) < 0.02 * np.max(np.abs(y))

    def test_spectral_reconstruction_identity(self):
        rng = np.random.default_rng(16)
        g = rng.normal(size=(5, 7))
        bundle = qntk.bundle_from_matrix(g @ g.T)
        y = rng.normal(size=5)
        eta, t = 0.05 / bundle.eigenvalues[-1], 7.0
        pred = qntk.predict_at_time(bundle.matrix, bundle, y, eta, t)
        w, a = bundle.eigenvalues, bundle.eigenvectors
        manual = y - a.T @ (np.exp(-eta * w * t) * (a @ y))
        assert np.max(np.abs(pred - manual)) < 1e-9


def test_merged_index_header():
    assert qntk.merged_index_header(2, 2) == ["0.0", "0.1", "1.0", "1.1"]
