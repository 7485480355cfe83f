import numpy as np
import pytest

from aiin_gan_evaluator.errors import ConvergenceError, DataError, NotPsdError, ParameterError
from aiin_gan_evaluator.linalg import (
    check_symmetric,
    eigh,
    jacobi_eigh,
    mean_and_covariance,
    sqrtm_psd,
    trace_sqrt_product
)


def random_psd(rng, dim: int) -> np.ndarray:
    basis = rng.normal(size=(dim, dim))
    matrix = basis @ basis.T / dim + 0.1 * np.eye(dim)
    return (matrix + matrix.T) / 2.0


def relative_frobenius(a, b) -> float:
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


class TestMeanAndCovariance:
    def test_two_samples(self):
        mean, covariance = mean_and_covariance([[0.0, 0.0], [2.0, 2.0]])
        assert mean.tolist() == [1.0, 1.0]
        assert covariance.tolist() == [[2.0, 2.0], [2.0, 2.0]]

    def test_identical_rows_give_zero_covariance(self):
        _, covariance = mean_and_covariance([[3.0, -1.0, 5.0]] * 4)
        assert not covariance.any()

    def test_row_order_does_not_matter(self, np_rng):
        samples = np_rng.normal(size=(30, 5))
        _, forward = mean_and_covariance(samples)
        _, shuffled = mean_and_covariance(samples[np_rng.permutation(30)])
        assert np.allclose(forward, shuffled, atol=1e-12)

    def test_matches_numpy_sample_covariance(self, np_rng):
        samples = np_rng.normal(size=(50, 6))
        _, covariance = mean_and_covariance(samples)
        assert np.allclose(covariance, np.cov(samples, rowvar=False), atol=1e-12)

    def test_single_row_rejected(self):
        with pytest.raises(DataError):
            mean_and_covariance([[1.0, 2.0]])

    def test_non_finite_rejected(self):
        with pytest.raises(DataError):
            mean_and_covariance([[1.0, np.nan], [2.0, 3.0]])


class TestCheckSymmetric:
    def test_asymmetric_rejected(self):
        with pytest.raises(ParameterError):
            check_symmetric([[1.0, 2.0], [2.1, 1.0]])

    def test_non_square_rejected(self):
        with pytest.raises(ParameterError):
            check_symmetric([[1.0, 2.0, 3.0]])

    def test_tiny_asymmetry_accepted(self):
        check_symmetric([[1.0, 2.0], [2.0 + 1e-12, 1.0]])


class TestJacobi:
    def test_identity(self):
        result = jacobi_eigh(np.eye(3))
        assert np.allclose(result.eigenvalues, [1.0, 1.0, 1.0])

    def test_diagonal_is_sorted_descending(self):
        result = jacobi_eigh(np.diag([1.0, 3.0]))
        assert np.allclose(result.eigenvalues, [3.0, 1.0])
        assert np.allclose(np.abs(result.eigenvectors), [[0.0, 1.0], [1.0, 0.0]])

    @pytest.mark.parametrize("method", ["jacobi", "lapack"])
    def test_both_solvers_sort_descending(self, method, np_rng):
        eigenvalues = eigh(random_psd(np_rng, 12), method=method).eigenvalues
        assert np.all(np.diff(eigenvalues) <= 0.0)

    def test_two_by_two_by_hand(self):
        result = jacobi_eigh([[2.0, 1.0], [1.0, 2.0]])
        assert np.allclose(result.eigenvalues, [3.0, 1.0], atol=1e-12)
        first = result.eigenvectors[:, 0] * np.sign(result.eigenvectors[0, 0])
        second = result.eigenvectors[:, 1] * np.sign(result.eigenvectors[0, 1])
        assert np.allclose(first, np.array([1.0, 1.0]) / np.sqrt(2.0))
        assert np.allclose(second, np.array([1.0, -1.0]) / np.sqrt(2.0))

    def test_one_by_one(self):
        result = jacobi_eigh([[5.0]])
        assert result.eigenvalues.tolist() == [5.0]
        assert result.eigenvectors.tolist() == [[1.0]]

    def test_reconstruction_and_orthonormality(self, np_rng):
        for dim in (2, 3, 7, 16, 33):
            matrix = np_rng.normal(size=(dim, dim))
            matrix = matrix + matrix.T
            values, vectors = jacobi_eigh(matrix)
            assert relative_frobenius((vectors * values) @ vectors.T, matrix) < 1e-9
            assert np.allclose(vectors.T @ vectors, np.eye(dim), atol=1e-9)
            assert np.all(np.diff(values) <= 0.0)

    def test_eigenvalue_sum_is_trace(self, np_rng):
        for _ in range(50):
            dim = int(np_rng.integers(1, 20))
            matrix = random_psd(np_rng, dim)
            total = jacobi_eigh(matrix).eigenvalues.sum()
            assert abs(total - np.trace(matrix)) <= 1e-9 * abs(np.trace(matrix))

    def test_agrees_with_lapack(self, np_rng):
        matrix = random_psd(np_rng, 12)
        assert np.allclose(
            eigh(matrix, method="jacobi").eigenvalues,
            eigh(matrix, method="lapack").eigenvalues,
            atol=1e-10
        )

    def test_sweep_budget_exhausted(self):
        with pytest.raises(ConvergenceError):
            jacobi_eigh([[2.0, 1.0], [1.0, 2.0]], max_sweeps=0)

    def test_unknown_method(self):
        with pytest.raises(ParameterError):
            eigh(np.eye(80), method="qr")


class TestSqrtmPsd:
    def test_identity(self):
        assert np.allclose(sqrtm_psd(np.eye(4)), np.eye(4))

    def test_diagonal(self):
        assert np.allclose(sqrtm_psd(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))

    def test_two_by_two_by_hand(self):
        root = sqrtm_psd([[2.0, 1.0], [1.0, 2.0]])
        assert np.allclose(root, [[1.3660254, 0.3660254], [0.3660254, 1.3660254]], atol=1e-7)

    def test_square_reproduces_input(self, np_rng):
        for _ in range(200):
            dim = int(np_rng.integers(1, 65))
            matrix = random_psd(np_rng, dim)
            root = sqrtm_psd(matrix)
            assert np.array_equal(root, root.T)
            assert relative_frobenius(root @ root, matrix) < 1e-8

    def test_lapack_route_above_jacobi_range(self, np_rng):
        matrix = random_psd(np_rng, 80)
        root = sqrtm_psd(matrix)
        assert relative_frobenius(root @ root, matrix) < 1e-8

    def test_tiny_negative_eigenvalue_clamped(self):
        root = sqrtm_psd(np.diag([1.0, -1e-10]))
        assert np.allclose(root, np.diag([1.0, 0.0]))

    def test_not_psd(self):
        with pytest.raises(NotPsdError):
            sqrtm_psd(np.diag([1.0, -1.0]))

    def test_ridge(self):
        assert np.allclose(sqrtm_psd(np.zeros((2, 2)), eps=4.0), 2.0 * np.eye(2))


class TestTraceSqrtProduct:
    def test_identity(self):
        assert trace_sqrt_product(np.eye(2), np.eye(2)) == pytest.approx(2.0)

    def test_scalar(self):
        assert trace_sqrt_product([[4.0]], [[9.0]]) == pytest.approx(6.0)

    def test_brute_force_oracle(self, np_rng):
        for _ in range(100):
            dim = int(np_rng.integers(1, 5))
            a = random_psd(np_rng, dim)
            b = random_psd(np_rng, dim)
            expected = np.sum(np.sqrt(np.linalg.eigvals(a @ b).real.clip(0.0)))
            assert trace_sqrt_product(a, b) == pytest.approx(expected, abs=1e-8)

    def test_symmetric_in_arguments(self, np_rng):
        for _ in range(30):
            dim = int(np_rng.integers(1, 20))
            a = random_psd(np_rng, dim)
            b = random_psd(np_rng, dim)
            assert trace_sqrt_product(a, b) == pytest.approx(trace_sqrt_product(b, a), abs=1e-8)

    def test_dimension_mismatch(self):
        with pytest.raises(ParameterError):
            trace_sqrt_product(np.eye(2), np.eye(3))

    def test_second_argument_not_psd(self):
        with pytest.raises(NotPsdError):
            trace_sqrt_product(np.eye(2), np.diag([1.0, -2.0]))
