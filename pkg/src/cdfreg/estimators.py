"""Estimators of the mixture weight vector.

Closed-form ridge and unregularized solves, Euclidean and weighted-norm
simplex projections, the penalized (burn-in-free) estimator, the
sigma-regularized estimator in truncated coordinates, and the ECDF and
simplex-MLE baselines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .basis import BasisFamily
from .errors import ConvergenceError, SingularGram
from .gram import GramState, regularized_gram

_SINGULAR_EIG_TOL = 1e-10


@dataclass
class SigmaSequence:
    """Regularization weights sigma_i with an optional eigenbasis rotation.

    ``basis_rotation`` has the eigenvectors e_i as columns; when None the
    eigenbasis of the supplied Gram matrix is used (ascending eigenvalues).
    """
    sigmas: np.ndarray
    basis_rotation: np.ndarray | None = None

    def __post_init__(self):
        self.sigmas = np.asarray(self.sigmas, dtype=float)
        if np.any(self.sigmas == 0):
            raise ValueError("all sigma_i must be nonzero")


def _spd_solve(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cholesky solve with one diagonal-jitter retry for borderline matrices."""
    try:
        return cho_solve(cho_factor(A), b)
    except LinAlgError:
        jitter = 1e-12 * np.trace(A) / A.shape[0]
        return cho_solve(cho_factor(A + jitter * np.eye(A.shape[0])), b)


def ridge_estimate(state: GramState, lam: float) -> np.ndarray:
    """Solve (U_n + lambda I) theta = u_n for lambda > 0."""
    if lam <= 0:
        raise ValueError("lambda must be positive; use unregularized_estimate for lambda=0")
    A = regularized_gram(state, lam)
    theta = _spd_solve(A, state.u)
    resid = np.linalg.norm(A @ theta - state.u)
    if resid > 1e-10 * (1.0 + np.linalg.norm(state.u)):
        raise ConvergenceError(f"ridge solve residual {resid:.3e} too large", best=theta)
    return theta


def unregularized_estimate(state: GramState) -> np.ndarray:
    """Solve U_n theta = u_n; requires a strictly positive smallest eigenvalue."""
    mu = float(np.linalg.eigvalsh(0.5 * (state.U + state.U.T))[0])
    if mu <= _SINGULAR_EIG_TOL:
        raise SingularGram(f"smallest Gram eigenvalue {mu:.3e} <= {_SINGULAR_EIG_TOL}")
    return _spd_solve(state.U, state.u)


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort and threshold)."""
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("cannot project non-finite vector")
    s = np.sort(v)[::-1]
    css = np.cumsum(s) - 1.0
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(s - css / idx > 0)[0][-1]
    tau = css[rho] / (rho + 1.0)
    out = np.maximum(v - tau, 0.0)
    return out / out.sum()  # exact renormalization for downstream KS use


def project_simplex_weighted(v, A, max_iter: int = 5000, tol: float = 1e-12) -> np.ndarray:
    """A-norm projection onto the simplex via projected gradient descent."""
    v = np.asarray(v, dtype=float)
    A = np.asarray(A, dtype=float)
    eigs = np.linalg.eigvalsh(0.5 * (A + A.T))
    if eigs[0] <= 0:
        raise ValueError("weight matrix A must be positive definite")
    if v.size == 1:
        return np.array([1.0])
    step = 1.0 / eigs[-1]
    theta = project_simplex(v)
    for _ in range(max_iter):
        new = project_simplex(theta - step * (A @ (theta - v)))
        if np.linalg.norm(new - theta) < tol:
            return new
        theta = new
    return theta


def delta_nU_default(n: int, d: int, delta: float) -> float:
    """Default penalty level d sqrt(8 n log(d/delta))."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be >= 1")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0,1)")
    return d * math.sqrt(8.0 * n * math.log(d / delta))


def _penalized_objective(theta, A, b, delta_nU):
    return np.linalg.norm(A @ theta - b) + delta_nU * np.linalg.norm(theta)


def penalized_estimate(state: GramState, lam: float, delta_nU: float,
                       max_iter: int = 5000, tol: float = 1e-8) -> np.ndarray:
    """Minimize ||U_n(lambda) theta - u_n|| + delta_nU ||theta|| by subgradient descent."""
    if delta_nU <= 0:
        raise ValueError("delta_nU must be positive")
    A = regularized_gram(state, lam)
    b = state.u
    f = lambda th: _penalized_objective(th, A, b, delta_nU)

    b_norm = np.linalg.norm(b)
    if b_norm == 0.0:
        return np.zeros(state.d)
    # Zero is optimal iff the residual-term subgradient at 0 fits in the
    # delta_nU ball: ||A^T b|| / ||b|| <= delta_nU.
    if np.linalg.norm(A.T @ b) <= delta_nU * b_norm * (1 + 1e-12):
        return np.zeros(state.d)

    theta = ridge_estimate(state, max(lam, 1e-8))
    best = theta.copy()
    f_best = f(theta)
    f0 = f(theta)
    window_best = f_best
    since_improve = 0
    for _ in range(max_iter):
        r = A @ theta - b
        rn = np.linalg.norm(r)
        tn = np.linalg.norm(theta)
        g = (A.T @ r / rn if rn > 0 else np.zeros_like(theta))
        if tn > 0:
            g = g + delta_nU * theta / tn
        gn2 = float(g @ g)
        if gn2 == 0.0:
            break
        # Polyak step towards a refreshed best-so-far target level.
        target = f_best - 1e-3 * f0
        gamma = max(f(theta) - target, 0.0) / gn2
        theta = theta - gamma * g
        f_cur = f(theta)
        if f_cur < f_best:
            f_best = f_cur
            best = theta.copy()
        if window_best - f_best > tol:
            window_best = f_best
            since_improve = 0
        else:
            since_improve += 1
            if since_improve >= 50:
                break
    else:
        raise ConvergenceError("penalized solver hit max_iter", best=best, objective=f_best)
    if f(np.zeros(state.d)) < f_best:
        best = np.zeros(state.d)
    return best


def hilbert_estimate(U_coeffs, u_coeffs, sigma: SigmaSequence) -> np.ndarray:
    """Apply the sigma-regularized inverse coordinatewise in the eigenbasis of U.

    theta_hat = sum_i sigma_i^2 <e_i, u> / (1 + lambda_i sigma_i^2) e_i where
    the e_i are eigenvectors of U (or the supplied rotation columns).
    """
    U = np.asarray(U_coeffs, dtype=float)
    u = np.asarray(u_coeffs, dtype=float)
    m = u.size
    if sigma.sigmas.size != m:
        raise ValueError("sigma sequence length must match the coefficient dimension")
    if sigma.basis_rotation is not None:
        E = np.asarray(sigma.basis_rotation, dtype=float)
    else:
        _, E = np.linalg.eigh(0.5 * (U + U.T))
    lam = np.einsum("im,ij,jm->m", E, U, E)
    coeff = sigma.sigmas ** 2 * (E.T @ u) / (1.0 + lam * sigma.sigmas ** 2)
    return E @ coeff


class EmpiricalCdf:
    """Right-continuous step CDF of a sample."""

    def __init__(self, samples):
        samples = np.asarray(samples, dtype=float)
        if samples.size == 0:
            raise ValueError("ECDF requires a non-empty sample")
        self.sorted = np.sort(samples)
        self.n = samples.size

    @property
    def jump_points(self) -> np.ndarray:
        return np.unique(self.sorted)

    def __call__(self, t):
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        vals = np.searchsorted(self.sorted, ts, side="right") / self.n
        return float(vals[0]) if np.isscalar(t) else vals


def ecdf(samples) -> EmpiricalCdf:
    return EmpiricalCdf(samples)


def fit_mle_simplex(samples, basis: BasisFamily, max_iter: int = 2000,
                    tol: float = 1e-8) -> np.ndarray:
    """Maximize sum_j log(theta^T rho_j) over the simplex by projected gradient ascent.

    rho_j are the per-coordinate PMF values of the discrete outcome basis.
    """
    rho = np.array([basis.pmf_vector(x, y) for x, y in samples])
    if np.any(rho.max(axis=1) <= 0):
        raise ValueError("degenerate likelihood: some sample has zero mass under every basis")
    d = basis.d
    if d == 1:
        return np.array([1.0])
    theta = np.full(d, 1.0 / d)

    def negloglik(th):
        lik = rho @ th
        if np.any(lik <= 0):
            return np.inf
        return -float(np.sum(np.log(lik)))

    fval = negloglik(theta)
    step = 1.0 / len(samples)
    for _ in range(max_iter):
        grad = -(rho / (rho @ theta)[:, None]).sum(axis=0)
        s = step
        while s > 1e-16:
            cand = project_simplex(theta - s * grad)
            fc = negloglik(cand)
            if fc <= fval - 1e-12:
                break
            s *= 0.5
        # KKT residual via the unit-step projected-gradient mapping.
        if np.linalg.norm(theta - project_simplex(theta - grad / len(samples))) <= tol:
            break
        if s <= 1e-16:
            break
        theta, fval = cand, fc
    return theta
