"""
Dense symmetric linear algebra for the Frechet distance: sample statistics,
a cyclic Jacobi eigensolver, the PSD square root and Tr((A B)^(1/2)).
"""
import logging
from functools import lru_cache
from typing import Literal, NamedTuple

import numpy as np

from aiin_gan_evaluator.errors import ConvergenceError, DataError, NotPsdError, ParameterError

logger = logging.getLogger(__name__)

EigenMethod = Literal["auto", "jacobi", "lapack"]

SYMMETRY_TOLERANCE = 1e-9
PSD_TOLERANCE = 1e-8
# above this dimension "auto" hands the eigenproblem to LAPACK
JACOBI_MAX_AUTO_DIM = 64


class EighResult(NamedTuple):
    """Eigenvalues in descending order with matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def check_symmetric(values) -> np.ndarray:
    """
    Validate a square, finite, symmetric matrix and return it as float64.

    Raises:
        ParameterError: Not square, non-finite, or asymmetric beyond
            1e-9 * max(1, |a_ij|)
    """
    matrix = np.asarray(values, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] < 1:
        raise ParameterError(f"Error! Expected a non-empty square matrix, got shape {matrix.shape}.")
    if not np.all(np.isfinite(matrix)):
        raise ParameterError("Error! Matrix contains non-finite entries.")

    asymmetry = np.abs(matrix - matrix.T)
    if np.any(asymmetry > SYMMETRY_TOLERANCE * np.maximum(1.0, np.abs(matrix))):
        raise ParameterError(f"Error! Matrix is not symmetric (max asymmetry {asymmetry.max():.3e}).")
    return matrix


def mean_and_covariance(features) -> tuple[np.ndarray, np.ndarray]:
    """
    Column means and the (n - 1)-normalised sample covariance.

    Args:
        features (array-like): (n, d) matrix, one sample per row, n >= 2

    Returns:
        tuple: (mean vector of length d, symmetric d x d covariance)
    """
    matrix = np.asarray(features, dtype=np.float64)
    if matrix.ndim != 2:
        raise DataError(f"Error! Feature matrix must be 2-D, got shape {matrix.shape}.")
    if matrix.shape[0] < 2:
        raise DataError(f"Error! At least 2 samples are needed for a covariance, got {matrix.shape[0]}.")
    if not np.all(np.isfinite(matrix)):
        raise DataError("Error! Feature matrix contains non-finite values.")

    mean = matrix.mean(axis=0)
    centered = matrix - mean
    covariance = centered.T @ centered / (matrix.shape[0] - 1)
    return mean, (covariance + covariance.T) / 2.0


@lru_cache(maxsize=32)
def _round_robin_rounds(dim: int) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
    """
    Tournament ordering of all index pairs: each round holds disjoint pairs,
    and the rounds together visit every pair exactly once per sweep.
    """
    players = list(range(dim + dim % 2))
    size = len(players)
    rounds = []
    for _ in range(size - 1):
        pairs = [(players[i], players[size - 1 - i]) for i in range(size // 2)]
        pairs = [(min(a, b), max(a, b)) for a, b in pairs if a < dim and b < dim]
        if pairs:
            p, q = zip(*pairs)
            rounds.append((np.asarray(p), np.asarray(q)))
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(rounds)


def jacobi_eigh(values, tol: float = 1e-12, max_sweeps: int = 100) -> EighResult:
    """
    Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Every round applies a set of disjoint plane rotations at once, so one sweep
    annihilates each off-diagonal pair once. Iteration stops when the
    off-diagonal Frobenius norm drops below tol times the total norm.

    Args:
        values (array-like): Symmetric matrix
        tol (float): Relative off-diagonal tolerance
        max_sweeps (int): Sweep budget

    Returns:
        EighResult: Descending eigenvalues and orthonormal eigenvectors

    Raises:
        ConvergenceError: Tolerance not reached within max_sweeps
    """
    a = check_symmetric(values).copy()
    dim = a.shape[0]
    v = np.eye(dim)
    total = np.linalg.norm(a)
    rounds = _round_robin_rounds(dim)

    for sweep in range(max_sweeps + 1):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * total:
            break
        if sweep == max_sweeps:
            raise ConvergenceError(
                f"Error! Jacobi eigensolver did not converge in {max_sweeps} sweeps "
                f"(off-diagonal norm {off:.3e})."
            )

        for p, q in rounds:
            apq = a[p, q]
            active = apq != 0.0
            if not active.any():
                continue

            app = a[p, p]
            aqq = a[q, q]
            theta = (aqq - app) / (2.0 * np.where(active, apq, 1.0))
            t = np.where(theta >= 0.0, 1.0, -1.0) / (np.abs(theta) + np.hypot(theta, 1.0))
            t = np.where(active, t, 0.0)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c

            col_p = a[:, p]
            col_q = a[:, q]
            a[:, p] = c * col_p - s * col_q
            a[:, q] = s * col_p + c * col_q

            row_p = a[p, :]
            row_q = a[q, :]
            a[p, :] = c[:, None] * row_p - s[:, None] * row_q
            a[q, :] = s[:, None] * row_p + c[:, None] * row_q
            a[p, q] = 0.0
            a[q, p] = 0.0

            vec_p = v[:, p]
            vec_q = v[:, q]
            v[:, p] = c * vec_p - s * vec_q
            v[:, q] = s * vec_p + c * vec_q

        logger.debug("Jacobi sweep %d on %dx%d, off-diagonal norm %.3e", sweep + 1, dim, dim, off)

    eigenvalues = np.diag(a).copy()
    order = np.argsort(-eigenvalues, kind='stable')
    return EighResult(eigenvalues[order], v[:, order])


def eigh(values, method: EigenMethod = "auto") -> EighResult:
    """
    Symmetric eigendecomposition, descending order.

    'auto' uses the Jacobi solver up to 64 x 64 and LAPACK above that.
    """
    matrix = check_symmetric(values)
    if method == "jacobi" or (method == "auto" and matrix.shape[0] <= JACOBI_MAX_AUTO_DIM):
        return jacobi_eigh(matrix)
    if method not in ("auto", "lapack"):
        raise ParameterError(f"Error! Unknown eigen method '{method}'.")

    eigenvalues, eigenvectors = np.linalg.eigh(matrix)
    return EighResult(eigenvalues[::-1].copy(), eigenvectors[:, ::-1].copy())


def sqrtm_psd(values, eps: float = 0.0, method: EigenMethod = "auto") -> np.ndarray:
    """
    Principal square root of a positive semi-definite matrix.

    Args:
        values (array-like): Symmetric PSD matrix
        eps (float): Optional ridge added to the diagonal before the root
        method (str): Eigen solver selection, see eigh

    Returns:
        np.ndarray: Symmetric root R with R @ R ~= values

    Raises:
        NotPsdError: An eigenvalue lies below -1e-8
    """
    matrix = check_symmetric(values)
    if eps:
        matrix = matrix + eps * np.eye(matrix.shape[0])

    result = eigh(matrix, method=method)
    smallest = result.eigenvalues[-1]
    if smallest < -PSD_TOLERANCE:
        raise NotPsdError(f"Error! Matrix is not positive semi-definite (eigenvalue {smallest:.3e}).")

    roots = np.sqrt(np.clip(result.eigenvalues, 0.0, None))
    root = (result.eigenvectors * roots) @ result.eigenvectors.T
    return (root + root.T) / 2.0


def trace_sqrt_product(sr, ss, method: EigenMethod = "auto") -> float:
    """
    Tr((sr ss)^(1/2)) for PSD sr and ss.

    Computed as the sum of square roots of the eigenvalues of the symmetric
    matrix A ss A with A = sr^(1/2), which shares its spectrum with sr ss.
    """
    sr = check_symmetric(sr)
    ss = check_symmetric(ss)
    if sr.shape != ss.shape:
        raise ParameterError(f"Error! Dimension mismatch: {sr.shape} vs {ss.shape}.")

    smallest = eigh(ss, method=method).eigenvalues[-1]
    if smallest < -PSD_TOLERANCE:
        raise NotPsdError(f"Error! Second matrix is not positive semi-definite (eigenvalue {smallest:.3e}).")

    root = sqrtm_psd(sr, method=method)
    product = root @ ss @ root
    product = (product + product.T) / 2.0
    eigenvalues = eigh(product, method=method).eigenvalues
    return float(np.sum(np.sqrt(np.clip(eigenvalues, 0.0, None))))
