"""One-shot label selection shared by k models on different representations."""

import logging
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import MismatchedLengths, QueryBudgetInfeasible
from .lewis import LewisConfig, WeightVector, as_matrix, lewis_weights
from .regression import NeuronProblem, NeuronSolution, as_activation, solve_constrained_neuron
from .sampling import (
    QueryPlan,
    SamplingDistribution,
    SamplingMatrix,
    bernoulli_sampling_matrix,
    build_sampling_matrix,
    draw_until_distinct,
    max_weight_distribution,
    sample_size_bound,
    spawn_seeds,
)

logger = logging.getLogger(__name__)


@dataclass
class MultiRepDataset:
    """k feature representations of one pool of instances.

    ``unlabeled[j]`` is U^j (n_u x d_j) and ``labeled[j]`` is L^j (n_l x d_j);
    ``labels`` are the n_l known labels. Column counts may differ between
    representations. With no labeled data pass ``labeled=[]``.
    """

    unlabeled: list
    labeled: list = field(default_factory=list)
    labels: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        self.unlabeled = [as_matrix(U) for U in self.unlabeled]
        if not self.unlabeled:
            raise ValueError("need at least one representation")
        if len({U.shape[0] for U in self.unlabeled}) != 1:
            raise MismatchedLengths("unlabeled matrices disagree on n_u")
        self.labels = np.asarray(self.labels, dtype=np.float64).reshape(-1)
        if not self.labeled:
            self.labeled = [np.zeros((0, U.shape[1])) for U in self.unlabeled]
        else:
            self.labeled = [np.asarray(L, dtype=np.float64).reshape(-1, U.shape[1])
                            for L, U in zip(self.labeled, self.unlabeled)]
        if len(self.labeled) != self.k:
            raise MismatchedLengths(f"{len(self.labeled)} labeled matrices for {self.k} representations")
        if len({L.shape[0] for L in self.labeled}) != 1 or self.labeled[0].shape[0] != self.labels.shape[0]:
            raise MismatchedLengths("labeled matrices and labels disagree on n_l")

    @property
    def k(self) -> int:
        return len(self.unlabeled)

    @property
    def n_u(self) -> int:
        return self.unlabeled[0].shape[0]

    @property
    def n_l(self) -> int:
        return self.labels.shape[0]

    def full_matrix(self, j: int) -> np.ndarray:
        """A^j = [L^j; U^j]."""
        return np.vstack([self.labeled[j], self.unlabeled[j]])


class LabelOracle:
    """Label source for the unlabeled pool that charges each index once."""

    def __init__(self):
        self._known = {}
        self.order = []

    def _fetch(self, index: int) -> float:
        raise NotImplementedError

    def query(self, index: int) -> float:
        index = int(index)
        if index not in self._known:
            self._known[index] = float(self._fetch(index))
            self.order.append(index)
            self._record(index, self._known[index])
        return self._known[index]

    def _record(self, index, label):
        pass

    @property
    def query_count(self) -> int:
        return len(self._known)

    def audit_lines(self) -> list[str]:
        return [f"{i},{self._known[i]!r}" for i in self.order]


class ArrayOracle(LabelOracle):
    """Labels held in memory."""

    def __init__(self, labels):
        super().__init__()
        self._labels = np.asarray(labels, dtype=np.float64)

    def _fetch(self, index):
        return self._labels[index]


class FileOracle(LabelOracle):
    """Labels read on demand from a text file with one value per line.

    Line ``i`` (0-based) holds the label of unlabeled instance ``i``. When
    ``audit_path`` is given, every first-time query is appended to it as
    ``index,label``.
    """

    def __init__(self, path, audit_path=None):
        super().__init__()
        self.path = os.fspath(path)
        self.audit_path = audit_path
        self._offsets = None
        if audit_path is not None:
            open(audit_path, "w").close()

    def _index(self):
        offsets = []
        with open(self.path, "rb") as fh:
            pos = 0
            for line in fh:
                if line.strip():
                    offsets.append(pos)
                pos += len(line)
        self._offsets = offsets

    def _fetch(self, index):
        if self._offsets is None:
            self._index()
        if not 0 <= index < len(self._offsets):
            raise IndexError(f"label index {index} outside the {len(self._offsets)} labels in {self.path}")
        with open(self.path, "rb") as fh:
            fh.seek(self._offsets[index])
            text = fh.readline().decode().strip()
        try:
            return float(text)
        except ValueError as exc:
            raise ValueError(f"{self.path}:{index + 1}: cannot parse label {text!r}") from exc

    def _record(self, index, label):
        if self.audit_path is not None:
            with open(self.audit_path, "a") as fh:
                fh.write(f"{index},{label!r}\n")


@dataclass
class PipelineResult:
    solutions: list
    plan: QueryPlan
    T: float
    queries_used: int
    weights: list = field(repr=False)
    distribution: SamplingDistribution = field(repr=False)
    S: SamplingMatrix = field(repr=False)
    y: np.ndarray = field(repr=False)
    advised_m: Optional[int] = None


def compute_weights(matrices: Sequence, cfg: LewisConfig) -> list[WeightVector]:
    return [lewis_weights(U, cfg) for U in matrices]


def solve_models(
    data: MultiRepDataset, y_full, S: SamplingMatrix, f, p: float, epsilon: float,
    constrained: bool = True, seed: int = 0, **solver_opts,
) -> list[NeuronSolution]:
    """Fit every representation on the shared sampled rows ``S``.

    ``y_full`` has length n_l + n_u; entries never selected by ``S`` are not
    read, so unqueried labels may hold any placeholder. Every model uses the
    same solver seed.
    """
    f = as_activation(f)
    Sy = S.apply(y_full)
    out = []
    for j in range(data.k):
        SA = S.apply(data.full_matrix(j))
        prob = NeuronProblem(SA, Sy, f, p, epsilon, constrained)
        out.append(solve_constrained_neuron(prob, seed, **solver_opts))
    return out


SCHEMES = ("iid", "bernoulli", "full")


def shared_sampler(weights, n_l: int, tau: int, p: float, seed: int, scheme: str = "iid",
                   m_cap: Optional[int] = None, beta: Optional[float] = None):
    """Sampling matrix shared by all models, built from per-model weights.

    ``"iid"`` draws until ``tau`` distinct indices appear; ``"bernoulli"``
    keeps each index with probability ``min(beta max_j w_i^j, 1)`` (``beta``
    defaults to ``tau / T``); ``"full"`` keeps every row with unit scale.

    Returns ``(plan, S, dist)``; for the last two schemes ``plan.draws`` lists
    the kept indices once each.
    """
    dist = max_weight_distribution(weights)
    n_u = dist.n
    if scheme == "iid":
        plan = draw_until_distinct(dist, tau, seed, m_cap)
        S = build_sampling_matrix(plan, dist, n_l, p)
    elif scheme == "bernoulli":
        if beta is None:
            beta = tau / dist.total
        B = bernoulli_sampling_matrix(dist.probs * dist.total, beta, p, seed)
        plan = QueryPlan(B.indices, seed)
        S = SamplingMatrix(np.concatenate([np.arange(n_l), n_l + B.indices]),
                           np.concatenate([np.ones(n_l), B.scales]), n_l + n_u, p)
    elif scheme == "full":
        plan = QueryPlan(np.arange(n_u), seed)
        S = SamplingMatrix.identity(n_l + n_u, p)
    else:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    return plan, S, dist


def run_one_shot(
    data: MultiRepDataset,
    oracle: LabelOracle,
    tau: int,
    epsilon: float,
    p: float = 2.0,
    f="identity",
    cfg: Optional[LewisConfig] = None,
    seed: int = 0,
    constrained: bool = True,
    *,
    m_cap: Optional[int] = None,
    constant_c: Optional[float] = None,
    scheme: str = "iid",
    beta: Optional[float] = None,
    solver_opts: Optional[dict] = None,
) -> PipelineResult:
    """Select ``tau`` unlabeled instances once, query them, and fit k models.

    Steps: Lewis weights of each U^j; sampling distribution from their
    elementwise maximum; i.i.d. draws until ``tau`` distinct indices appear,
    querying each new index through ``oracle``; a sampling matrix with unit
    rows for labeled data and ``(m p_q)^{-1/p}`` rows for draws; one
    constrained neuron fit per representation on the shared rows.

    ``scheme`` swaps the draw step for the alternatives of
    :func:`shared_sampler`. When ``constant_c`` is given the sample size
    suggested by :func:`sample_size_bound` is recorded as ``advised_m``.
    """
    if tau > data.n_u:
        raise QueryBudgetInfeasible(f"tau={tau} exceeds the unlabeled pool size n_u={data.n_u}")
    cfg = LewisConfig(p=p) if cfg is None else cfg
    if cfg.p != p:
        cfg = LewisConfig(**{**cfg.__dict__, "p": p})
    draw_seed, solve_seed = spawn_seeds(seed, 2)

    weights = compute_weights(data.unlabeled, cfg)
    plan, S, dist = shared_sampler(weights, data.n_l, tau, p, draw_seed, scheme, m_cap, beta)
    ybar = np.zeros(data.n_u)
    for q in plan.draws:
        ybar[q] = oracle.query(q)
    y = np.concatenate([data.labels, ybar])
    logger.info("queried %d distinct of %d draws, T=%.4f", plan.n_distinct, plan.m, dist.total)

    solutions = solve_models(data, y, S, f, p, epsilon, constrained, solve_seed, **(solver_opts or {}))
    advised = None
    if constant_c is not None:
        d_max = max(U.shape[1] for U in data.unlabeled)
        advised = sample_size_bound(d_max, p, epsilon, dist.total, constant_c)
    return PipelineResult(solutions, plan, dist.total, plan.n_distinct, weights, dist, S, y, advised)
