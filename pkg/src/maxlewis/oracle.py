"""Independent checks: subspace-embedding distortion and reference optima.

Nothing here reuses the solvers it is meant to check, apart from the
convex l_p baseline used for identity activations.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.optimize

from .errors import MismatchedLengths
from .lewis import as_matrix, check_full_rank
from .regression import as_activation, lp_norm_p, neuron_loss, neuron_loss_grad, solve_lp_regression
from .sampling import SamplingMatrix, make_rng


@dataclass(frozen=True)
class DistortionReport:
    """Distortion of ``S`` on the column space of ``A``.

    ``epsilon_hat`` is measured on the p-th power scale,
    ``sup |‖SAθ‖_p^p / ‖Aθ‖_p^p - 1|``. ``epsilon_norm`` is the same sup on
    the norm scale, ``sup |‖SAθ‖_p / ‖Aθ‖_p - 1|``, i.e. the smallest ε with
    (1-ε)‖Aθ‖ <= ‖SAθ‖ <= (1+ε)‖Aθ‖ (exact for ``exact_p2``, a lower bound
    for ``monte_carlo``).
    """

    epsilon_hat: float
    method: str
    trials: int = 0
    epsilon_norm: Optional[float] = None
    p: float = 2.0


def _check_shapes(A, S):
    if S.n_source != A.shape[0]:
        raise MismatchedLengths(f"S acts on {S.n_source} rows, A has {A.shape[0]}")


def exact_distortion_p2(A, S: SamplingMatrix) -> DistortionReport:
    """Exact squared-norm distortion at p = 2.

    With Q an orthonormal basis of range(A), ``sup_θ |‖SAθ‖² / ‖Aθ‖² - 1|``
    equals the spectral norm of ``(SQ)^T (SQ) - I``, which is similar to
    ``G^{-1/2}(A^T S^T S A - G)G^{-1/2}`` for ``G = A^T A``.
    """
    A = as_matrix(A)
    _check_shapes(A, S)
    check_full_rank(A)
    Q, _ = np.linalg.qr(A, mode="reduced")
    SQ = S.apply(Q)
    eig = np.linalg.eigvalsh(SQ.T @ SQ)
    lo, hi = float(eig[0]), float(eig[-1])
    eps_hat = max(abs(hi - 1.0), abs(lo - 1.0))
    eps_norm = max(abs(np.sqrt(hi) - 1.0), abs(1.0 - np.sqrt(max(lo, 0.0))))
    return DistortionReport(eps_hat, "exact_p2", 0, float(eps_norm), 2.0)


def monte_carlo_distortion(A, S: SamplingMatrix, p: float, trials: int = 1000,
                           seed: int = 0, batch: int = 512) -> DistortionReport:
    """Largest ``|‖SAθ‖_p^p / ‖Aθ‖_p^p - 1|`` over random unit directions.

    A lower bound on the true distortion.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    A = as_matrix(A)
    _check_shapes(A, S)
    SA = S.apply(A)
    rng = make_rng(seed)
    worst, worst_norm = 0.0, 0.0
    done = 0
    while done < trials:
        b = min(batch, trials - done)
        theta = rng.standard_normal((A.shape[1], b))
        theta /= np.linalg.norm(theta, axis=0)
        full = np.sum(np.abs(A @ theta) ** p, axis=0)
        samp = np.sum(np.abs(SA @ theta) ** p, axis=0)
        ok = full > 0
        ratio = samp[ok] / full[ok]
        if ratio.size:
            worst = max(worst, float(np.max(np.abs(ratio - 1.0))))
            worst_norm = max(worst_norm, float(np.max(np.abs(ratio ** (1.0 / p) - 1.0))))
        done += b
    return DistortionReport(worst, "monte_carlo", trials, worst_norm, float(p))


def brute_force_opt(A, y, f, p: float = 2.0, restarts: int = 50, seed: int = 0,
                    max_iter: int = 500):
    """Reference minimiser of ``‖f(Aθ) - y‖_p^p``.

    Identity activations go to the convex solver. Otherwise L-BFGS is started
    from the linear least-squares fit and then from ``restarts - 1`` Gaussian
    points drawn in sequence from one seeded stream, so a larger ``restarts``
    only adds starts and never worsens the result.

    Returns
    -------
    theta_star : ndarray
    opt : float
        Loss at ``theta_star``.
    """
    f = as_activation(f)
    A = as_matrix(A)
    y = np.asarray(y, dtype=np.float64)
    if f.kind == "identity":
        theta = solve_lp_regression(A, y, p, seed=seed)
        return theta, neuron_loss(A, y, theta, f, p)

    rng = make_rng(seed)
    base, *_ = np.linalg.lstsq(A, y, rcond=None)
    scale = max(np.linalg.norm(base), 1.0)

    def fun(theta):
        return neuron_loss_grad(A, y, theta, f, p)

    best_theta, best = np.zeros(A.shape[1]), neuron_loss(A, y, np.zeros(A.shape[1]), f, p)
    for r in range(max(restarts, 1)):
        x0 = base if r == 0 else scale * rng.standard_normal(A.shape[1]) / np.sqrt(A.shape[1])
        res = scipy.optimize.minimize(fun, x0, jac=True, method="L-BFGS-B",
                                      options={"maxiter": max_iter, "ftol": 1e-15, "gtol": 1e-12})
        loss = neuron_loss(A, y, res.x, f, p)
        if loss < best:
            best_theta, best = res.x, loss
    return best_theta, best


def planted_loss(A, y, theta, f, p: float) -> float:
    """Loss of a known parameter; an upper bound on OPT."""
    return neuron_loss(as_matrix(A), np.asarray(y, dtype=np.float64), theta, f, p)


__all__ = [
    "DistortionReport",
    "exact_distortion_p2",
    "monte_carlo_distortion",
    "brute_force_opt",
    "planted_loss",
    "lp_norm_p",
]
