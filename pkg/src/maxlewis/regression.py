"""l_p regression for linear and single-neuron models.

``solve_lp_regression`` is the convex baseline (closed form at p = 2, IRLS
otherwise). ``solve_constrained_neuron`` fits ``f(X theta) ~ y`` in the
p-th power loss, optionally inside the norm ball

    E = {theta : ||X theta||_p^p <= ||y||_p^p / (eps L^p)},

with multi-start projected gradient descent.
"""

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DegenerateConstraint, MismatchedLengths, NotConverged, RankDeficient
from .lewis import as_matrix, check_full_rank
from .sampling import make_rng

logger = logging.getLogger(__name__)

SMOOTHING_FLOOR = 1e-10


@dataclass(frozen=True)
class Activation:
    """Scalar activation with f(0) = 0 and Lipschitz constant ``L``."""

    kind: str = "identity"

    def __post_init__(self):
        if self.kind not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {self.kind!r}; choose from {sorted(_ACTIVATIONS)}")

    @property
    def L(self) -> float:
        return 1.0

    def __call__(self, z):
        return _ACTIVATIONS[self.kind][0](z)

    def derivative(self, z):
        return _ACTIVATIONS[self.kind][1](z)


def _relu_grad(z):
    # subgradient at 0 taken as 0
    return (z > 0).astype(np.float64)


_ACTIVATIONS = {
    "identity": (lambda z: np.asarray(z, dtype=np.float64), np.ones_like),
    "relu": (lambda z: np.maximum(z, 0.0), _relu_grad),
    "tanh": (np.tanh, lambda z: 1.0 / np.cosh(z) ** 2),
}


def as_activation(f) -> Activation:
    return f if isinstance(f, Activation) else Activation(f)


def lp_norm_p(v, p: float) -> float:
    """``||v||_p^p``."""
    return float(np.sum(np.abs(v) ** p))


def neuron_loss(X, y, theta, f, p: float) -> float:
    f = as_activation(f)
    return lp_norm_p(f(X @ theta) - y, p)


def neuron_loss_grad(X, y, theta, f, p: float):
    """Loss ``||f(X theta) - y||_p^p`` and its gradient in ``theta``."""
    f = as_activation(f)
    z = X @ theta
    r = f(z) - y
    ar = np.abs(r)
    loss = float(np.sum(ar**p))
    g = p * ar ** (p - 1) * np.sign(r) * f.derivative(z)
    return loss, X.T @ g


# ---------------------------------------------------------------------------
# convex l_p regression


def _least_squares(A, y):
    Q, R = np.linalg.qr(A, mode="reduced")
    return scipy.linalg.solve_triangular(R, Q.T @ y)


def _irls(A, y, theta, p, tol, max_iter):
    """IRLS with a backtracking line search along the reweighted LS step.

    Returns ``(theta, objective, status)`` with status one of
    ``"converged"``, ``"stalled"``, ``"max_iter"``.
    """
    obj = lp_norm_p(A @ theta - y, p)
    # IRLS is a majoriser for p <= 2; beyond that its step is (p - 1) x Newton
    t0 = 1.0 if p <= 2 else 1.0 / (p - 1.0)
    for _ in range(max_iter):
        r = A @ theta - y
        omega = np.maximum(np.abs(r), SMOOTHING_FLOOR) ** (p - 2.0)
        sw = np.sqrt(omega)
        try:
            target = _least_squares(A * sw[:, None], y * sw)
        except np.linalg.LinAlgError:
            return theta, obj, "stalled"
        step = target - theta
        t = t0
        while t > 1e-12:
            cand = theta + t * step
            cand_obj = lp_norm_p(A @ cand - y, p)
            if cand_obj <= obj:
                break
            t *= 0.5
        else:
            if obj == 0 or np.linalg.norm(step) <= 1e-12 * (1 + np.linalg.norm(theta)):
                return theta, obj, "converged"
            return theta, obj, "stalled"
        decrease = obj - cand_obj
        theta, obj = cand, cand_obj
        if decrease <= tol * obj or obj == 0:
            return theta, obj, "converged"
    return theta, obj, "max_iter"


def _subgradient(A, y, theta, p, iters=2000):
    """Normalised subgradient descent with a 1/sqrt(k) schedule, best iterate kept."""
    best, best_obj = theta.copy(), lp_norm_p(A @ theta - y, p)
    radius = 1.0 + np.linalg.norm(theta)
    for k in range(1, iters + 1):
        r = A @ theta - y
        g = A.T @ (p * np.abs(r) ** (p - 1) * np.sign(r))
        gn = np.linalg.norm(g)
        if gn == 0:
            break
        theta = theta - (0.1 * radius / np.sqrt(k)) * g / gn
        obj = lp_norm_p(A @ theta - y, p)
        if obj < best_obj:
            best, best_obj = theta.copy(), obj
    return best, best_obj


def solve_lp_regression(
    A, y, p: float = 2.0, tol: float = 1e-10, *, restarts: int = 5, seed: int = 0,
    max_iter: int = 1000, rank_tolerance: float = 1e-10,
) -> np.ndarray:
    """Minimise ``||A theta - y||_p`` over ``theta``.

    p = 2 is solved by QR. Otherwise IRLS is run from the least squares
    solution and from ``restarts`` random perturbations of it; a run that
    stalls is continued by subgradient descent. The best objective over all
    runs is returned.

    Raises
    ------
    RankDeficient
        ``A`` lacks full column rank.
    NotConverged
        No run met the relative objective tolerance ``tol``.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    A = as_matrix(A)
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (A.shape[0],):
        raise MismatchedLengths(f"labels of shape {y.shape} for {A.shape[0]} rows")
    check_full_rank(A, rank_tolerance)
    theta_ls = _least_squares(A, y)
    if p == 2:
        return theta_ls

    rng = make_rng(seed)
    scale = 1.0 + np.linalg.norm(theta_ls)
    starts = [theta_ls] + [
        theta_ls + scale * rng.standard_normal(A.shape[1]) for _ in range(restarts)
    ]
    best, best_obj, any_converged = None, np.inf, False
    for start in starts:
        theta, obj, status = _irls(A, y, start, p, tol, max_iter)
        if status != "converged":
            theta, obj = _subgradient(A, y, theta, p)
            theta, obj, status = _irls(A, y, theta, p, tol, max_iter)
        any_converged |= status == "converged"
        if obj < best_obj:
            best, best_obj = theta, obj
    if not any_converged:
        raise NotConverged(f"IRLS did not reach tolerance {tol:g} from any start",
                           residual=best_obj, result=best)
    return best


# ---------------------------------------------------------------------------
# single neuron


@dataclass
class NeuronProblem:
    """Sampled single-neuron problem: fit ``f(SA theta)`` to ``Sy``."""

    SA: np.ndarray
    Sy: np.ndarray
    f: Activation = field(default_factory=Activation)
    p: float = 2.0
    epsilon: float = 0.25
    constrained: bool = True

    def __post_init__(self):
        self.SA = as_matrix(self.SA)
        self.Sy = np.asarray(self.Sy, dtype=np.float64)
        self.f = as_activation(self.f)
        if self.Sy.shape != (self.SA.shape[0],):
            raise MismatchedLengths(f"{self.SA.shape[0]} rows but labels of shape {self.Sy.shape}")
        if not np.all(np.isfinite(self.Sy)):
            raise ValueError("labels must be finite")
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.constrained and not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")

    @property
    def constraint_rhs(self) -> float:
        if not self.constrained:
            return np.inf
        return lp_norm_p(self.Sy, self.p) / (self.epsilon * self.f.L**self.p)


@dataclass
class NeuronSolution:
    theta: np.ndarray
    loss: float
    constraint_lhs: float
    constraint_rhs: float
    converged: bool
    iterations: int
    trace: list = field(default_factory=list, repr=False)

    @property
    def feasible(self) -> bool:
        return self.constraint_lhs <= self.constraint_rhs * (1 + 1e-8)


class _Whitened:
    """Coordinates phi = R theta where SA = QR, so ||SA theta||_2 = ||phi||_2."""

    def __init__(self, X):
        try:
            check_full_rank(X)
            Q, R = np.linalg.qr(X, mode="reduced")
            self.R = R
        except RankDeficient:
            self.R = None

    def to_theta(self, phi):
        if self.R is None:
            return phi
        return scipy.linalg.solve_triangular(self.R, phi)

    def to_phi(self, theta):
        return theta if self.R is None else self.R @ theta

    def grad(self, grad_theta):
        if self.R is None:
            return grad_theta
        return scipy.linalg.solve_triangular(self.R, grad_theta, trans="T")


def _radial_project(X, theta, p, rhs):
    if not np.isfinite(rhs):
        return theta
    lhs = lp_norm_p(X @ theta, p)
    if lhs <= rhs:
        return theta
    # ||X (s theta)||_p^p = s^p lhs, so the boundary scalar is exact
    return theta * (rhs / lhs) ** (1.0 / p)


def _pgd(prob, phi0, coords, max_iters, ftol):
    X, y, f, p = prob.SA, prob.Sy, prob.f, prob.p
    rhs = prob.constraint_rhs

    def evaluate(phi):
        theta = coords.to_theta(phi)
        loss, g = neuron_loss_grad(X, y, theta, f, p)
        return theta, loss, coords.grad(g)

    def project(phi):
        return coords.to_phi(_radial_project(X, coords.to_theta(phi), p, rhs))

    phi = project(phi0)
    theta, loss, g = evaluate(phi)
    trace = [loss]
    step = 0.5
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        accepted = False
        while step > 1e-30:
            cand = project(phi - step * g)
            diff = cand - phi
            c_theta, c_loss, c_g = evaluate(cand)
            bound = loss + g @ diff + (diff @ diff) / (2.0 * step)
            if c_loss <= bound and c_loss <= loss:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            # no numerically detectable descent left
            converged = True
            break
        decrease = loss - c_loss
        moved = np.linalg.norm(diff)
        phi, theta, loss, g = cand, c_theta, c_loss, c_g
        trace.append(loss)
        if loss == 0 or (decrease <= ftol * loss and moved <= 1e-9 * (1.0 + np.linalg.norm(phi))):
            converged = True
            break
        step *= 2.0
    return theta, loss, converged, it, trace


def solve_constrained_neuron(
    prob: NeuronProblem, seed: int = 0, *, starts: int = 5, max_iters: int = 3000,
    ftol: float = 1e-12, warm_start: bool = True,
) -> NeuronSolution:
    """Approximate ``argmin_{theta in E} ||f(SA theta) - Sy||_p^p``.

    Projected gradient descent with backtracking, run from theta = 0, from
    ``starts - 1`` seeded Gaussian points scaled into E, and (when
    ``warm_start``) from the l_p regression fit of ``Sy`` on ``SA``. Steps are
    taken in whitened coordinates of ``SA`` when it has full column rank.
    Projection onto E is radial scaling toward the origin. Without the
    constraint this is plain multi-start gradient descent.

    The returned solution is the lowest-loss run; ``converged`` reports
    whether that run met its stopping rule.
    """
    X, y, p = prob.SA, prob.Sy, prob.p
    d = X.shape[1]
    rhs = prob.constraint_rhs

    if prob.constrained and rhs == 0:
        warnings.warn("sampled labels are all zero; constraint set is {0}", DegenerateConstraint)
        theta = np.zeros(d)
        return NeuronSolution(theta, neuron_loss(X, y, theta, prob.f, p), 0.0, 0.0, True, 0)

    coords = _Whitened(X)
    rng = make_rng(seed)
    thetas = [np.zeros(d)]
    target = rhs / 2.0 if prob.constrained else lp_norm_p(y, p)
    for _ in range(max(starts - 1, 0)):
        v = rng.standard_normal(d)
        size = lp_norm_p(X @ v, p)
        if size > 0 and target > 0:
            v = v * (target / size) ** (1.0 / p)
        thetas.append(v)
    if warm_start and coords.R is not None:
        try:
            thetas.append(solve_lp_regression(X, y, p, seed=seed))
        except NotConverged as exc:
            thetas.append(exc.result)

    best = None
    for theta0 in thetas:
        theta, loss, converged, iters, trace = _pgd(prob, coords.to_phi(theta0), coords, max_iters, ftol)
        if best is None or loss < best[1]:
            best = (theta, loss, converged, iters, trace)
    theta, loss, converged, iters, trace = best
    theta = _radial_project(X, theta, p, rhs)
    lhs = lp_norm_p(X @ theta, p)
    if not converged:
        logger.warning("neuron solve hit max_iters=%d; returning best iterate", max_iters)
    return NeuronSolution(theta, neuron_loss(X, y, theta, prob.f, p), lhs,
                          rhs, converged, iters, trace)


def evaluate_guarantee(A_full, y_full, theta_tilde, theta_star, f, p: float, epsilon: float) -> float:
    """Ratio of the achieved full-data loss to ``OPT + eps L^p ||A theta*||_p^p``.

    Returns 0 for 0/0 and ``inf`` for a positive numerator over a zero
    denominator.
    """
    f = as_activation(f)
    A_full = as_matrix(A_full)
    y_full = np.asarray(y_full, dtype=np.float64)
    num = neuron_loss(A_full, y_full, np.asarray(theta_tilde, dtype=np.float64), f, p)
    z_star = A_full @ np.asarray(theta_star, dtype=np.float64)
    den = lp_norm_p(f(z_star) - y_full, p) + epsilon * f.L**p * lp_norm_p(z_star, p)
    if den == 0:
        return 0.0 if num == 0 else np.inf
    return num / den
