"""Low-rank + sparse matrix decomposition via inexact augmented Lagrangian.

Splits a nonnegative spectrogram X into X_L (low rank, repeating
structure) and X_S (sparse residual) by minimizing
``||X_L||_* + (lam/sqrt(max(T, F))) * ||X_S||_1`` subject to
``X_L + X_S = X``. The solver is the standard inexact ALM iteration:
alternate singular-value thresholding on X_L and entrywise soft
thresholding on X_S while ramping the penalty mu.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

try:
    from threadpoolctl import threadpool_info
except ImportError:  # pragma: no cover
    threadpool_info = None

logger = logging.getLogger(__name__)

__all__ = ["RpcaConfig", "RpcaResult", "soft_threshold", "svt", "decompose", "trace_to_csv"]


@dataclass(frozen=True)
class RpcaConfig:
    """Solver settings.

    lam is the sparsity weight before the 1/sqrt(max(T, F)) size
    scaling. mu_initial_scale sets mu0 = mu_initial_scale / ||X||_2;
    mu grows by mu_growth each iteration and is capped at mu0 * mu_cap.
    """

    lam: float = 1.0
    tolerance: float = 1e-7
    max_iterations: int = 1000
    mu_initial_scale: float = 1.25
    mu_growth: float = 1.5
    mu_cap: float = 1e7

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lam must be positive, got %r" % (self.lam,))
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.mu_initial_scale <= 0 or self.mu_growth <= 1 or self.mu_cap < 1:
            raise ValueError("invalid mu schedule")


@dataclass(frozen=True)
class RpcaResult:
    """Decomposition output. low_rank + sparse approximates the input to
    within final_residual (relative Frobenius norm of the constraint gap).

    trace holds one (iteration, residual, rank_estimate, nnz) row per
    iteration for inspection; metadata records the BLAS thread count the
    SVDs ran with, when discoverable.
    """

    low_rank: np.ndarray
    sparse: np.ndarray
    iterations: int
    converged: bool
    final_residual: float
    lambda_hat: float
    trace: tuple = ()
    metadata: dict = field(default_factory=dict)


def soft_threshold(values: np.ndarray, threshold: float) -> np.ndarray:
    """Entrywise shrinkage: sign(v) * max(|v| - threshold, 0)."""
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    v = np.asarray(values, dtype=np.float64)
    return np.sign(v) * np.maximum(np.abs(v) - threshold, 0.0)


def svt(values: np.ndarray, threshold: float) -> np.ndarray:
    """Singular value thresholding: soft-shrink the spectrum by threshold."""
    low_rank, _ = _svt_with_rank(np.asarray(values, dtype=np.float64), threshold)
    return low_rank


def _svt_with_rank(values, threshold):
    u, s, vt = np.linalg.svd(values, full_matrices=False)
    shrunk = np.maximum(s - threshold, 0.0)
    rank = int(np.count_nonzero(shrunk))
    return (u[:, :rank] * shrunk[:rank]) @ vt[:rank], rank


def _blas_threads():
    if threadpool_info is None:
        return None
    counts = [info.get("num_threads") for info in threadpool_info()]
    return max(counts) if counts else None


def decompose(x, cfg: RpcaConfig = RpcaConfig()) -> RpcaResult:
    """Split a matrix into low-rank and sparse parts.

    Parameters
    ----------
    x : np.ndarray or object with a ``values`` array
        Real (frames, bins) matrix; NaN or Inf entries are rejected.
    cfg : RpcaConfig

    Returns
    -------
    RpcaResult
        Hitting max_iterations sets converged=False (with a logged
        warning) rather than raising.
    """
    x = np.asarray(getattr(x, "values", x), dtype=np.float64)
    if x.ndim != 2 or x.size == 0:
        raise ValueError("input must be a non-empty 2-d matrix, got shape %s" % (x.shape,))
    if not np.all(np.isfinite(x)):
        raise ValueError("input contains NaN or Inf")

    lam_hat = cfg.lam / np.sqrt(max(x.shape))
    x_fro = np.linalg.norm(x)
    metadata = {"blas_threads": _blas_threads()}
    if x_fro == 0.0:
        return RpcaResult(
            low_rank=np.zeros_like(x),
            sparse=np.zeros_like(x),
            iterations=0,
            converged=True,
            final_residual=0.0,
            lambda_hat=lam_hat,
            metadata=metadata,
        )

    norm_two = np.linalg.norm(x, 2)
    norm_inf = np.abs(x).max()
    y = x / max(norm_two, norm_inf / lam_hat)
    s = np.zeros_like(x)
    mu = cfg.mu_initial_scale / norm_two
    mu_limit = mu * cfg.mu_cap

    trace = []
    residual = np.inf
    converged = False
    iterations = 0
    low_rank = np.zeros_like(x)
    for iterations in range(1, cfg.max_iterations + 1):
        low_rank, rank = _svt_with_rank(x - s + y / mu, 1.0 / mu)
        s = soft_threshold(x - low_rank + y / mu, lam_hat / mu)
        gap = x - low_rank - s
        y = y + mu * gap
        residual = np.linalg.norm(gap) / x_fro
        trace.append((iterations, residual, rank, int(np.count_nonzero(s))))
        mu = min(mu * cfg.mu_growth, mu_limit)
        if residual < cfg.tolerance:
            converged = True
            break

    if not converged:
        logger.warning(
            "low-rank/sparse solver stopped at %d iterations with residual %.3e "
            "(tolerance %.1e)", iterations, residual, cfg.tolerance
        )
    return RpcaResult(
        low_rank=low_rank,
        sparse=s,
        iterations=iterations,
        converged=converged,
        final_residual=float(residual),
        lambda_hat=float(lam_hat),
        trace=tuple(trace),
        metadata=metadata,
    )


def trace_to_csv(result: RpcaResult, path) -> None:
    """Dump the per-iteration solver trace for debugging."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "residual", "rank_estimate", "nnz"])
        writer.writerows(result.trace)
