"""Observational statistics of max-weight sampling across representations."""

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import AbsentClass, EmptyLabels, MismatchedLengths, RankDeficient
from .lewis import check_full_rank
from .sampling import make_rng


@dataclass(frozen=True)
class CurvePoint:
    k: int
    T: float
    upper_bound: float


def _stack(weights) -> np.ndarray:
    arrays = [np.asarray(w, dtype=np.float64) for w in weights]
    if not arrays:
        raise ValueError("need at least one weight vector")
    if len({a.shape for a in arrays}) != 1 or arrays[0].ndim != 1:
        raise MismatchedLengths("weight vectors have different lengths")
    return np.stack(arrays)


def max_weight_sum_curve(weights: Sequence, n: Optional[int] = None,
                         ranks: Optional[Sequence[int]] = None) -> list[CurvePoint]:
    """Sum of elementwise-maximum weights over the first k' models, k' = 1..k.

    The upper bound at k' is ``min(sum_{j<=k'} d_j, n)``. ``ranks`` defaults
    to the rounded total weight of each vector, which equals its column rank
    for Lewis weights.
    """
    W = _stack(weights)
    if n is None:
        n = W.shape[1]
    elif n != W.shape[1]:
        raise MismatchedLengths(f"weight vectors have length {W.shape[1]}, expected {n}")
    if ranks is None:
        ranks = [int(round(row.sum())) for row in W]
    running = np.maximum.accumulate(W, axis=0).sum(axis=1)
    bound = np.minimum(np.cumsum(ranks), n)
    return [CurvePoint(k + 1, float(running[k]), float(bound[k])) for k in range(W.shape[0])]


def top_indices(v: np.ndarray, size: int) -> np.ndarray:
    """Indices of the ``size`` largest entries; ties go to the smaller index."""
    order = np.lexsort((np.arange(v.shape[0]), -v))
    return order[:size]


def coverage_kappa(weights: Sequence, t_percent: float) -> float:
    """Mean share of each model's top-t% rows that the max-weight top-t% contains.

    Set size is ``max(1, floor(t/100 * n))``.
    """
    if not 0 < t_percent <= 100:
        raise ValueError("t_percent must lie in (0, 100]")
    W = _stack(weights)
    n = W.shape[1]
    size = max(1, math.floor(t_percent / 100.0 * n))
    top_max = set(top_indices(W.max(axis=0), size).tolist())
    shares = [len(top_max.intersection(top_indices(w, size).tolist())) / size for w in W]
    return float(np.mean(shares))


def class_imbalance(labels: Iterable, class_universe: Optional[Iterable] = None) -> float:
    """Largest class count divided by the smallest."""
    counts = Counter(labels)
    if not counts:
        raise EmptyLabels("no labels given")
    if class_universe is not None:
        universe = list(class_universe)
        missing = [c for c in universe if counts.get(c, 0) == 0]
        if missing:
            raise AbsentClass(f"classes never observed: {missing}")
        values = [counts[c] for c in universe]
    else:
        values = list(counts.values())
    return max(values) / min(values)


def _random_rotation(rng, d):
    Q, R = np.linalg.qr(rng.standard_normal((d, d)))
    return Q * np.sign(np.diag(R))


def synthetic_backbones(n: int, d: int, k: int, correlation: float, seed: int,
                        rotate: bool = True, attempts: int = 3) -> list[np.ndarray]:
    """k correlated n x d feature matrices standing in for network backbones.

    All share a latent Gaussian Z; model j is
    ``tanh(sqrt(c) Z R_j + sqrt(1 - c) N_j)`` with R_j a random rotation
    (identity when ``rotate`` is false) and N_j fresh noise.
    """
    if n <= d:
        raise ValueError("need n > d")
    if not 0 <= correlation <= 1:
        raise ValueError("correlation must lie in [0, 1]")
    rng = make_rng(seed)
    a, b = math.sqrt(correlation), math.sqrt(1.0 - correlation)
    Z = rng.standard_normal((n, d))
    out = []
    for j in range(k):
        for attempt in range(attempts):
            R = _random_rotation(rng, d) if rotate else np.eye(d)
            M = np.tanh(a * (Z @ R) + b * rng.standard_normal((n, d)))
            try:
                check_full_rank(M)
                break
            except RankDeficient:
                if attempt == attempts - 1:
                    raise
        out.append(M)
    return out


def curve_csv(points: Sequence[CurvePoint]) -> str:
    lines = ["k,T,upper_bound"] + [f"{pt.k},{pt.T!r},{pt.upper_bound!r}" for pt in points]
    return "\n".join(lines) + "\n"


def kappa_csv(rows: Sequence[tuple]) -> str:
    lines = ["t,kappa"] + [f"{t!r},{kappa!r}" for t, kappa in rows]
    return "\n".join(lines) + "\n"
