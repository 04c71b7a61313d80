"""Sampling distributions, query plans and reweighted sampling matrices.

Randomness comes exclusively from :func:`make_rng`, a Philox4x64-10
counter-based generator seeded with an explicit integer. Draws consume the
generator's double stream (``Generator.random``) only, and the mapping from
uniforms to indices is an inverse-CDF lookup done here, so a seed fixes the
draws independently of numpy's higher level sampling routines.
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    AllZeroWeights,
    BudgetExceedsSupport,
    CapExceeded,
    IndexOutOfRange,
    MismatchedLengths,
    MixedExponents,
)
from .lewis import WeightVector

RNG_NAME = "philox4x64-10/v1"


def make_rng(seed: int) -> np.random.Generator:
    """The package's only source of randomness."""
    if seed is None:
        raise ValueError("an explicit integer seed is required")
    return np.random.Generator(np.random.Philox(int(seed)))


def spawn_seeds(seed: int, count: int) -> list[int]:
    """Derive ``count`` independent child seeds from ``seed``."""
    children = np.random.SeedSequence(int(seed)).spawn(count)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


@dataclass(frozen=True)
class SamplingDistribution:
    probs: np.ndarray
    total: float = 1.0  # unnormalised mass, the T of the max-weight scheme

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError("probabilities must be a non-empty vector")
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise ValueError("probabilities must be finite and non-negative")
        s = probs.sum()
        if s <= 0:
            raise AllZeroWeights("distribution has no mass")
        if abs(s - 1.0) > 1e-12:
            probs = probs / s
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_weights(cls, weights) -> "SamplingDistribution":
        w = np.asarray(weights, dtype=np.float64)
        return cls(w / w.sum(), float(w.sum()))

    @property
    def n(self) -> int:
        return self.probs.shape[0]

    @property
    def support_size(self) -> int:
        return int(np.count_nonzero(self.probs > 0))

    def cdf(self) -> np.ndarray:
        c = np.cumsum(self.probs)
        return c / c[-1]


@dataclass(frozen=True, eq=False)
class QueryPlan:
    """Ordered draws (with repetition) and the distinct indices they hit.

    ``distinct`` keeps first-occurrence order, which is the order labels are
    requested in.
    """

    draws: np.ndarray
    seed: Optional[int] = None
    distinct: tuple = field(init=False)

    def __post_init__(self):
        draws = np.asarray(self.draws, dtype=np.int64)
        draws.setflags(write=False)
        object.__setattr__(self, "draws", draws)
        _, first = np.unique(draws, return_index=True)
        object.__setattr__(self, "distinct", tuple(int(draws[i]) for i in np.sort(first)))

    def __eq__(self, other):
        if not isinstance(other, QueryPlan):
            return NotImplemented
        return self.seed == other.seed and np.array_equal(self.draws, other.draws)

    __hash__ = None

    @property
    def m(self) -> int:
        return int(self.draws.shape[0])

    @property
    def n_distinct(self) -> int:
        return len(self.distinct)


@dataclass(frozen=True)
class SamplingMatrix:
    """Sparse row-selection operator; row r of ``S @ v`` is ``scales[r] * v[indices[r]]``."""

    indices: np.ndarray
    scales: np.ndarray
    n_source: int
    p: float

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        sc = np.asarray(self.scales, dtype=np.float64)
        if idx.shape != sc.shape or idx.ndim != 1:
            raise ValueError("indices and scales must be vectors of equal length")
        if idx.size and (idx.min() < 0 or idx.max() >= self.n_source):
            raise IndexOutOfRange(f"source index outside [0, {self.n_source})")
        if not np.all(np.isfinite(sc)) or np.any(sc <= 0):
            raise ValueError("scales must be finite and positive")
        idx.setflags(write=False)
        sc.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "scales", sc)

    def __len__(self):
        return int(self.indices.shape[0])

    @property
    def rows(self) -> list[tuple[int, float]]:
        return list(zip(self.indices.tolist(), self.scales.tolist()))

    def apply(self, v) -> np.ndarray:
        """``S @ v`` for a vector or a matrix with ``n_source`` rows."""
        v = np.asarray(v, dtype=np.float64)
        if v.shape[0] != self.n_source:
            raise MismatchedLengths(f"operand has {v.shape[0]} rows, expected {self.n_source}")
        out = v[self.indices]
        if out.ndim == 1:
            return out * self.scales
        return out * self.scales.reshape((-1,) + (1,) * (out.ndim - 1))

    __matmul__ = apply

    def to_dense(self) -> np.ndarray:
        S = np.zeros((len(self), self.n_source))
        S[np.arange(len(self)), self.indices] = self.scales
        return S

    @classmethod
    def identity(cls, n: int, p: float = 2.0) -> "SamplingMatrix":
        return cls(np.arange(n), np.ones(n), n, p)


def max_weight_distribution(weights: Sequence) -> SamplingDistribution:
    """Normalised elementwise maximum of k weight vectors.

    ``probs_i = max_j w_i^j / T`` with ``T = sum_i max_j w_i^j``; ``T`` is
    kept on the result as ``total``.
    """
    weights = list(weights)
    if not weights:
        raise ValueError("need at least one weight vector")
    exps = {w.p for w in weights if isinstance(w, WeightVector)}
    if len(exps) > 1:
        raise MixedExponents(f"weight vectors computed for different p: {sorted(exps)}")
    arrays = [np.asarray(w, dtype=np.float64) for w in weights]
    lengths = {a.shape for a in arrays}
    if len(lengths) != 1 or arrays[0].ndim != 1:
        raise MismatchedLengths(f"weight vectors have shapes {sorted(lengths)}")
    mx = np.max(np.stack(arrays), axis=0)
    if np.any(mx < 0):
        raise ValueError("weights must be non-negative")
    total = float(mx.sum())
    if total <= 0:
        raise AllZeroWeights("every weight is zero")
    return SamplingDistribution(mx / total, total)


def _draw(rng, cdf, size):
    return np.searchsorted(cdf, rng.random(size), side="right")


def draw_fixed(dist: SamplingDistribution, m: int, seed: int) -> QueryPlan:
    """Exactly ``m`` i.i.d. draws from ``dist``."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return QueryPlan(_draw(make_rng(seed), dist.cdf(), m), seed)


def default_cap(tau: int) -> int:
    return 50 * tau * math.ceil(math.log(tau + 1))


def draw_until_distinct(
    dist: SamplingDistribution, tau: int, seed: int, m_cap: Optional[int] = None
) -> QueryPlan:
    """I.i.d. draws from ``dist`` until ``tau`` distinct indices have appeared.

    Every draw, repeated or not, is kept in ``plan.draws``, so ``plan.m``
    counts repetitions.

    Raises
    ------
    BudgetExceedsSupport
        Fewer than ``tau`` indices carry positive probability.
    CapExceeded
        ``m_cap`` draws happened first; ``exc.plan`` holds them.
    """
    if tau < 1:
        raise ValueError("tau must be >= 1")
    if tau > dist.support_size:
        raise BudgetExceedsSupport(
            f"tau={tau} exceeds the {dist.support_size} indices with positive probability"
        )
    if m_cap is None:
        m_cap = default_cap(tau)
    if m_cap < tau:
        raise ValueError("m_cap must be >= tau")

    rng = make_rng(seed)
    cdf = dist.cdf()
    seen = np.zeros(dist.n, dtype=bool)
    n_seen = 0
    chunks = []
    drawn = 0
    batch = max(2 * tau, 64)
    while drawn < m_cap:
        size = min(batch, m_cap - drawn)
        chunk = _draw(rng, cdf, size)
        for pos, q in enumerate(chunk):
            if not seen[q]:
                seen[q] = True
                n_seen += 1
                if n_seen == tau:
                    chunks.append(chunk[: pos + 1])
                    return QueryPlan(np.concatenate(chunks), seed)
        chunks.append(chunk)
        drawn += size
        batch *= 2
    raise CapExceeded(
        f"{m_cap} draws produced only {n_seen} of {tau} distinct indices",
        plan=QueryPlan(np.concatenate(chunks), seed),
    )


def build_sampling_matrix(
    plan: QueryPlan, dist: SamplingDistribution, n_l: int, p: float
) -> SamplingMatrix:
    """Stack ``n_l`` unit rows for labeled data over the reweighted draws.

    Draw ``i`` of unlabeled index ``q`` becomes the row selecting source row
    ``n_l + q`` with scale ``(m * probs[q]) ** (-1/p)``.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    draws = plan.draws
    if draws.size and (draws.min() < 0 or draws.max() >= dist.n):
        raise IndexOutOfRange("plan refers to indices outside the distribution")
    pq = dist.probs[draws]
    if np.any(pq <= 0):
        raise ValueError("plan contains a zero-probability index; was it drawn from dist?")
    scales = (plan.m * pq) ** (-1.0 / p)
    idx = np.concatenate([np.arange(n_l), n_l + draws])
    sc = np.concatenate([np.ones(n_l), scales])
    return SamplingMatrix(idx, sc, n_l + dist.n, float(p))


def bernoulli_probabilities(w, beta: float) -> np.ndarray:
    if not beta > 0:
        raise ValueError("beta must be positive")
    return np.minimum(beta * np.asarray(w, dtype=np.float64), 1.0)


def bernoulli_sampling_matrix(w, beta: float, p: float, seed: int) -> SamplingMatrix:
    """Keep row ``i`` independently with probability ``min(beta w_i, 1)``.

    A kept row is rescaled by ``p_i ** (-1/p)``; the row count is random.
    """
    probs = bernoulli_probabilities(w, beta)
    keep = make_rng(seed).random(probs.shape[0]) < probs
    idx = np.flatnonzero(keep)
    return SamplingMatrix(idx, probs[idx] ** (-1.0 / p), probs.shape[0], float(p))


def sample_size_bound(d: int, p: float, epsilon: float, T: float, c: float = 1.0) -> int:
    """Shared sample size ``c eps^-4 T d^max(p/2-1,0) log^2 d log(dT/eps)``.

    The logarithms are guarded at 2 so that d = 1 still gives a positive
    count.
    """
    if d < 1 or not 0 < epsilon < 1 or not T > 0 or not c > 0:
        raise ValueError("need d >= 1, 0 < epsilon < 1, T > 0, c > 0")
    value = (
        c
        * epsilon**-4
        * T
        * d ** max(p / 2.0 - 1.0, 0.0)
        * math.log(max(d, 2)) ** 2
        * math.log(max(d * T / epsilon, 2.0))
    )
    return math.ceil(value)
