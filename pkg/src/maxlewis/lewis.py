"""Leverage scores and l_p Lewis weights of dense matrices.

Lewis weights are the fixed point

    w_i = (a_i^T (A^T W^{1-2/p} A)^{-1} a_i)^{p/2},

computed here by the usual contraction iteration started from the uniform
vector d/n. At p = 2 they coincide with the leverage scores.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import NonFinite, NonPositiveWeight, NotConverged, RankDeficient

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WeightVector:
    """Per-row weights of a matrix together with the exponent they belong to."""

    w: np.ndarray
    p: float
    residual: float = 0.0
    iterations: int = 0

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.float64)
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    def __len__(self):
        return self.w.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.w if dtype is None else self.w.astype(dtype)

    @property
    def total(self) -> float:
        return float(self.w.sum())


@dataclass(frozen=True)
class LewisConfig:
    """Iteration schedule for :func:`lewis_weights`.

    ``damping=None`` picks 1 for p < 4 and 1/2 otherwise.
    """

    p: float = 2.0
    max_iters: int = 200
    fp_tolerance: float = 1e-10
    rank_tolerance: float = 1e-10
    damping: Optional[float] = None

    def __post_init__(self):
        if not self.p > 0:
            raise ValueError(f"p must be positive, got {self.p}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not (self.fp_tolerance > 0 and self.rank_tolerance > 0):
            raise ValueError("tolerances must be positive")
        if self.damping is not None and not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")

    @property
    def effective_damping(self) -> float:
        if self.damping is not None:
            return self.damping
        return 1.0 if self.p < 4 else 0.5


def as_matrix(A) -> np.ndarray:
    """Validate and convert ``A`` to a 2-D float64 array with finite entries."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NonFinite("matrix contains NaN or infinite entries")
    return A


def check_full_rank(A: np.ndarray, rank_tolerance: float = 1e-10) -> None:
    n, d = A.shape
    if n < d:
        raise RankDeficient(f"{n} rows cannot have column rank {d}")
    s = np.linalg.svd(A, compute_uv=False)
    if s[-1] <= rank_tolerance * s[0]:
        raise RankDeficient(
            f"smallest singular value {s[-1]:.3e} is below "
            f"{rank_tolerance:g} x largest ({s[0]:.3e})"
        )


def leverage_scores(A, rank_tolerance: float = 1e-10) -> WeightVector:
    """Leverage scores diag(A (A^T A)^{-1} A^T).

    Computed as squared row norms of the orthonormal factor of a reduced QR
    factorization.

    Parameters
    ----------
    A : array_like, shape (n, d)
        Full column rank matrix.
    rank_tolerance : float
        Relative singular value cutoff below which ``A`` is rank deficient.

    Returns
    -------
    WeightVector
        Scores in [0, 1] that sum to d, tagged with p = 2.
    """
    A = as_matrix(A)
    n, d = A.shape
    if n < d:
        raise RankDeficient(f"{n} rows cannot have column rank {d}")
    Q, R = np.linalg.qr(A, mode="reduced")
    check_full_rank(R, rank_tolerance)
    w = np.einsum("ij,ij->i", Q, Q)
    return WeightVector(np.clip(w, 0.0, 1.0), 2.0)


def _quadratic_forms(A, w, p):
    """a_i^T (A^T W^{1-2/p} A)^{-1} a_i for every row."""
    scale = w ** (1.0 - 2.0 / p)
    gram = (A * scale[:, None]).T @ A
    try:
        chol = scipy.linalg.cholesky(gram, lower=True)
    except np.linalg.LinAlgError as exc:
        raise RankDeficient("reweighted Gram matrix is not positive definite") from exc
    X = scipy.linalg.solve_triangular(chol, A.T, lower=True)
    return np.einsum("ij,ij->j", X, X)


def _fixed_point_residual(A, w, p):
    candidate = _quadratic_forms(A, w, p) ** (p / 2.0)
    return candidate, float(np.max(np.abs(candidate / w - 1.0)))


def verify_fixed_point(A, w, p: Optional[float] = None) -> float:
    """Maximum relative violation of the Lewis fixed-point equation.

    Returns ``max_i |(a_i^T (A^T W^{1-2/p} A)^{-1} a_i)^{p/2} / w_i - 1|``.
    """
    if isinstance(w, WeightVector):
        p = w.p if p is None else p
        w = w.w
    if p is None:
        raise ValueError("p is required when w is a plain array")
    A = as_matrix(A)
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (A.shape[0],):
        raise ValueError(f"weight vector of length {w.shape} does not match {A.shape[0]} rows")
    if not np.all(w > 0):
        raise NonPositiveWeight("fixed-point check needs strictly positive weights")
    return _fixed_point_residual(A, w, p)[1]


def lewis_weights(A, cfg: Optional[LewisConfig] = None, **overrides) -> WeightVector:
    """l_p Lewis weights of ``A`` by damped fixed-point iteration.

    The iteration is ``w <- w^{1-a} * q(w)^{a}`` with ``q(w)`` the right hand
    side of the fixed-point equation and ``a`` the damping. It stops once the
    relative fixed-point residual of the current iterate is at most
    ``cfg.fp_tolerance``; the returned vector is the one that was certified.

    Keyword overrides (``p=1``, ``max_iters=...``) replace fields of ``cfg``.

    Raises
    ------
    RankDeficient
        ``A`` is not of full column rank within ``cfg.rank_tolerance``.
    NotConverged
        ``max_iters`` reached; ``exc.result`` holds the last iterate and
        ``exc.residual`` its residual.
    """
    if cfg is None:
        cfg = LewisConfig(**overrides)
    elif overrides:
        cfg = LewisConfig(**{**cfg.__dict__, **overrides})
    A = as_matrix(A)
    n, d = A.shape
    check_full_rank(A, cfg.rank_tolerance)
    p = float(cfg.p)
    damping = cfg.effective_damping

    w = np.full(n, d / n)
    residual = np.inf
    for it in range(cfg.max_iters):
        candidate, residual = _fixed_point_residual(A, w, p)
        if residual <= cfg.fp_tolerance:
            logger.debug("lewis weights p=%g converged in %d iterations", p, it)
            return WeightVector(np.clip(w, 0.0, 1.0), p, residual, it)
        if damping == 1.0:
            w = candidate
        else:
            w = w ** (1.0 - damping) * candidate**damping
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise NotConverged(f"iteration left the positive orthant at step {it}", residual)

    _, residual = _fixed_point_residual(A, w, p)
    if residual <= cfg.fp_tolerance:
        return WeightVector(np.clip(w, 0.0, 1.0), p, residual, cfg.max_iters)
    raise NotConverged(
        f"Lewis iteration for p={p:g} stopped after {cfg.max_iters} steps "
        f"with residual {residual:.3e}",
        residual=residual,
        result=WeightVector(w, p, residual, cfg.max_iters),
    )
