"""Correlated normal and uniform sampling through a Gaussian copula.

Covariance square roots use a symmetric eigendecomposition with negative
eigenvalues clipped to zero, so rank-deficient covariances (fewer realizations
than frequency points) are handled where a Cholesky factor would not exist.
"""

import logging
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from plc_synth.constant import PSD_REPAIR_TOL, ROW_BLOCK, SQRT_EIG_TOL, SYMMETRY_TOL
from plc_synth.errors import IndefiniteMatrixError, NotSymmetricError
from plc_synth.estimation import GaussianFieldParams
from plc_synth.utils import parallel_map, row_blocks

logger = logging.getLogger(__name__)

# Largest float below 1 and smallest above 0, so u never reaches the closed ends
_U_LOW = np.nextafter(0.0, 1.0)
_U_HIGH = np.nextafter(1.0, 0.0)


@dataclass(frozen=True)
class SeedStream:
    """
    Seedable, splittable random source.

    Row ``r`` of stream ``s`` under ``seed`` always draws from the same generator,
    so output does not depend on worker count or on which rows are produced.
    """

    seed: int
    stream: int = 0

    def row(self, index: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(self.stream, index)))


def _check_symmetric(k: np.ndarray) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise NotSymmetricError(f"Expected a square matrix, got shape {k.shape}")
    scale = max(1.0, float(np.max(np.abs(k), initial=0.0)))
    if np.max(np.abs(k - k.T), initial=0.0) > SYMMETRY_TOL * scale:
        raise NotSymmetricError("Matrix is not symmetric")
    return (k + k.T) / 2


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    """Symmetric matrix with unit diagonal."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        entries = _check_symmetric(self.entries).copy()
        if np.max(np.abs(np.diag(entries) - 1.0), initial=0.0) > SYMMETRY_TOL:
            raise ValueError("Correlation matrix must have a unit diagonal")
        np.fill_diagonal(entries, 1.0)
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def psd_sqrt(k: np.ndarray) -> np.ndarray:
    """
    Symmetric square root S of a positive semidefinite K, with S @ S.T == K.

    Raises
    ------
    NotSymmetricError
        If K is not symmetric to 1e-10 (relative to its largest entry).
    IndefiniteMatrixError
        If an eigenvalue falls below -1e-8 times the largest eigenvalue.
    """
    sym = _check_symmetric(k)
    eigvals, eigvecs = np.linalg.eigh(sym)
    largest = max(float(eigvals[-1]), 0.0)
    if eigvals[0] < -SQRT_EIG_TOL * largest or (largest == 0.0 and eigvals[0] < 0):
        raise IndefiniteMatrixError(f"Matrix is indefinite: min eigenvalue {eigvals[0]:.3e}, max {largest:.3e}")
    root = np.sqrt(np.clip(eigvals, 0.0, None))
    return (eigvecs * root) @ eigvecs.T


def nearest_psd_repair(a: np.ndarray) -> CorrelationMatrix:
    """
    Clip negative eigenvalues, rebuild and rescale to a unit diagonal.

    A matrix that is already PSD (min eigenvalue >= -1e-10 * D) is returned unchanged.
    """
    sym = _check_symmetric(a)
    dim = sym.shape[0]
    eigvals, eigvecs = np.linalg.eigh(sym)
    if eigvals[0] >= -PSD_REPAIR_TOL * dim:
        return CorrelationMatrix(np.asarray(a, dtype=float))
    logger.info("Repairing indefinite correlation matrix (min eigenvalue %.3e)", eigvals[0])
    rebuilt = (eigvecs * np.clip(eigvals, 0.0, None)) @ eigvecs.T
    scale = np.sqrt(np.diag(rebuilt))
    scale = np.where(scale > 0, scale, 1.0)
    repaired = rebuilt / np.outer(scale, scale)
    repaired = (repaired + repaired.T) / 2
    np.fill_diagonal(repaired, 1.0)
    return CorrelationMatrix(np.clip(repaired, -1.0, 1.0))


def spearman_to_pearson(r: CorrelationMatrix) -> CorrelationMatrix:
    """Entrywise 2*sin(pi*r/6), exact at -1, 0 and 1, followed by a PSD repair if needed."""
    entries = r.entries
    mapped = np.where(np.abs(entries) == 1.0, entries, 2.0 * np.sin(entries * np.pi / 6.0))
    np.fill_diagonal(mapped, 1.0)
    return nearest_psd_repair(mapped)


def _draw_rows(
    rng: SeedStream,
    n: int,
    dim: int,
    transform: Callable[[np.ndarray], np.ndarray],
    threads: int,
) -> np.ndarray:
    # Blocks are fixed-size, so matrix products see identical shapes for any thread count
    def work(block: tuple[int, int]) -> np.ndarray:
        start, stop = block
        z = np.empty((stop - start, dim))
        for i, r in enumerate(range(start, stop)):
            z[i] = rng.row(r).standard_normal(dim)
        return transform(z)

    return np.concatenate(parallel_map(work, row_blocks(n, ROW_BLOCK), threads), axis=0)


def sample_correlated_normals(params: GaussianFieldParams, n: int, rng: SeedStream, threads: int = 1) -> np.ndarray:
    """
    ``n`` rows of ``S @ z + mean`` with ``S = psd_sqrt(params.cov)`` and z standard normal.

    Parameters
    ----------
    params : GaussianFieldParams
        Target mean and covariance.
    n : int
        Number of rows, >= 1.
    rng : SeedStream
        Row r draws from ``rng.row(r)``.
    threads : int
        Parallel width; never changes the result.
    """
    if n < 1:
        raise ValueError(f"Number of samples must be >= 1, got {n}")
    root = psd_sqrt(params.cov)
    mean = params.mean
    return _draw_rows(rng, n, params.grid_len, lambda z: z @ root.T + mean, threads)


def sample_correlated_uniforms(r_target: CorrelationMatrix, n: int, rng: SeedStream, threads: int = 1) -> np.ndarray:
    """
    Uniforms on (0, 1) whose Pearson correlation matches ``r_target``.

    Normals are drawn with correlation ``spearman_to_pearson(r_target)`` and mapped
    through the standard normal CDF.
    """
    if n < 1:
        raise ValueError(f"Number of samples must be >= 1, got {n}")
    root = psd_sqrt(spearman_to_pearson(r_target).entries)
    return _draw_rows(rng, n, r_target.dim, lambda z: np.clip(ndtr(z @ root.T), _U_LOW, _U_HIGH), threads)
