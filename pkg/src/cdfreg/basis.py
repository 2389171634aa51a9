"""Contextual CDF basis families and mixture-CDF utilities.

Each family evaluates a d-vector of CDF values Phi(x, t) in [0,1]^d,
where every coordinate t -> phi_i(x, t) is itself a CDF.  Families with
purely discrete outcomes expose their atoms for exact inverse sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import BracketError

_BISECT_TOL = 1e-10


def polynomial_exponent(d: int, i: int) -> float:
    """Exponent of the i-th polynomial basis coordinate (1-based index)."""
    if not 1 <= i <= d:
        raise IndexError(f"index {i} out of range [1, {d}]")
    if i <= (d + 1) / 2:
        return float(i)
    return 2.0 / (2 * i - d + 1)


class BasisFamily:
    """Abstract contextual CDF basis of dimension d."""

    d: int
    kind: str = "custom"

    def eval(self, x, t: float) -> np.ndarray:
        """Phi(x, t) as a (d,) vector."""
        return self.eval_nodes(x, np.array([float(t)]))[:, 0]

    def eval_nodes(self, x, ts: np.ndarray) -> np.ndarray:
        """Phi(x, t) for a grid of t values; returns a (d, len(ts)) array."""
        raise NotImplementedError

    def support(self, x):
        """Natural (lo, hi) bracket containing all outcome mass for context x."""
        raise NotImplementedError

    def atoms(self, x):
        """Atom locations for purely discrete families, else None."""
        return None

    def pmf_vector(self, x, y: float):
        """Per-coordinate probability mass at outcome y (discrete families only)."""
        raise NotImplementedError(f"{self.kind} basis has no discrete PMF")

    def to_spec(self) -> dict:
        raise NotImplementedError


class BernoulliBasis(BasisFamily):
    """d Bernoulli CDF coordinates; the context is the success-probability vector."""

    kind = "bernoulli"

    def __init__(self, d: int, p_map=None):
        self.d = int(d)
        self.p_map = p_map

    def probs(self, x) -> np.ndarray:
        p = np.asarray(self.p_map(x) if self.p_map is not None else x, dtype=float)
        if p.shape != (self.d,):
            raise ValueError(f"context must give a ({self.d},) probability vector")
        if np.any(p < 0) or np.any(p > 1):
            raise ValueError("Bernoulli success probabilities must lie in [0,1]")
        return p

    def eval_nodes(self, x, ts):
        p = self.probs(x)
        ts = np.asarray(ts, dtype=float)
        out = np.zeros((self.d, ts.size))
        mid = (ts >= 0) & (ts < 1)
        out[:, mid] = (1.0 - p)[:, None]
        out[:, ts >= 1] = 1.0
        return out

    def support(self, x):
        return (0.0, 1.0)

    def atoms(self, x):
        return np.array([0.0, 1.0])

    def pmf_vector(self, x, y):
        p = self.probs(x)
        if y == 0:
            return 1.0 - p
        if y == 1:
            return p
        return np.zeros(self.d)

    def to_spec(self):
        return {"kind": self.kind, "d": self.d}


class PolynomialBasis(BasisFamily):
    """Power-law CDFs (x t)^{r(i)} on [0, 1/x] for a positive scalar context x."""

    kind = "polynomial"

    def __init__(self, d: int):
        self.d = int(d)
        self.exponents = np.array([polynomial_exponent(self.d, i)
                                   for i in range(1, self.d + 1)])

    def eval_nodes(self, x, ts):
        x = float(x)
        if x <= 0:
            raise ValueError("polynomial basis requires a positive context")
        ts = np.asarray(ts, dtype=float)
        out = np.zeros((self.d, ts.size))
        inside = (ts >= 0) & (ts <= 1.0 / x)
        out[:, inside] = np.power(x * ts[inside][None, :], self.exponents[:, None])
        out[:, ts > 1.0 / x] = 1.0
        return out

    def support(self, x):
        return (0.0, 1.0 / float(x))

    def to_spec(self):
        return {"kind": self.kind, "d": self.d}


class GaussianLaplaceBasis(BasisFamily):
    """Convex mixtures of Gaussian and Laplace CDFs with per-coordinate linear locations."""

    kind = "gaussian_laplace"

    def __init__(self, w, beta_n1, beta_n0, beta_l1, beta_l0, sigma2, b):
        self.w = float(w)
        if not 0.0 <= self.w <= 1.0:
            raise ValueError("mixture weight w must lie in [0,1]")
        self.beta_n1 = np.asarray(beta_n1, dtype=float)
        self.beta_n0 = np.asarray(beta_n0, dtype=float)
        self.beta_l1 = np.asarray(beta_l1, dtype=float)
        self.beta_l0 = np.asarray(beta_l0, dtype=float)
        self.sigma2 = np.asarray(sigma2, dtype=float)
        self.b = np.asarray(b, dtype=float)
        if np.any(self.sigma2 <= 0) or np.any(self.b <= 0):
            raise ValueError("scales sigma2 and b must be positive")
        self.d = self.beta_n1.size

    def _locations(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.d,):
            raise ValueError(f"context must be a ({self.d},) vector")
        mu_n = self.beta_n1 * x + self.beta_n0
        mu_l = self.beta_l1 * x + self.beta_l0
        return mu_n, mu_l

    @staticmethod
    def _laplace_cdf(z):
        return np.where(z < 0, 0.5 * np.exp(z), 1.0 - 0.5 * np.exp(-z))

    def eval_nodes(self, x, ts):
        mu_n, mu_l = self._locations(x)
        ts = np.asarray(ts, dtype=float)
        zn = (ts[None, :] - mu_n[:, None]) / np.sqrt(self.sigma2)[:, None]
        zl = (ts[None, :] - mu_l[:, None]) / self.b[:, None]
        return (1.0 - self.w) * ndtr(zn) + self.w * self._laplace_cdf(zl)

    def support(self, x):
        mu_n, mu_l = self._locations(x)
        scale = max(float(np.sqrt(self.sigma2).max()), float(self.b.max()))
        lo = min(float(mu_n.min()), float(mu_l.min())) - 40.0 * scale
        hi = max(float(mu_n.max()), float(mu_l.max())) + 40.0 * scale
        return (lo, hi)

    def to_spec(self):
        return {"kind": self.kind, "w": self.w,
                "beta_n1": self.beta_n1.tolist(), "beta_n0": self.beta_n0.tolist(),
                "beta_l1": self.beta_l1.tolist(), "beta_l0": self.beta_l0.tolist(),
                "sigma2": self.sigma2.tolist(), "b": self.b.tolist()}


class LogisticProbitBasis(BasisFamily):
    """Bernoulli CDFs whose success probability mixes logistic and probit links."""

    kind = "logistic_probit"

    def __init__(self, w, beta_l1, beta_l0, beta_p1, beta_p0):
        self.w = float(w)
        if not 0.0 <= self.w <= 1.0:
            raise ValueError("mixture weight w must lie in [0,1]")
        self.beta_l1 = np.asarray(beta_l1, dtype=float)
        self.beta_l0 = np.asarray(beta_l0, dtype=float)
        self.beta_p1 = np.asarray(beta_p1, dtype=float)
        self.beta_p0 = np.asarray(beta_p0, dtype=float)
        self.d = self.beta_l1.size

    def success_probs(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.d,):
            raise ValueError(f"context must be a ({self.d},) vector")
        logit = 1.0 / (1.0 + np.exp(-(self.beta_l1 * x + self.beta_l0)))
        probit = ndtr(self.beta_p1 * x + self.beta_p0)
        return self.w * logit + (1.0 - self.w) * probit

    def eval_nodes(self, x, ts):
        p = self.success_probs(x)
        ts = np.asarray(ts, dtype=float)
        out = np.zeros((self.d, ts.size))
        mid = (ts >= 0) & (ts < 1)
        out[:, mid] = (1.0 - p)[:, None]
        out[:, ts >= 1] = 1.0
        return out

    def support(self, x):
        return (0.0, 1.0)

    def atoms(self, x):
        return np.array([0.0, 1.0])

    def pmf_vector(self, x, y):
        p = self.success_probs(x)
        if y == 0:
            return 1.0 - p
        if y == 1:
            return p
        return np.zeros(self.d)

    def to_spec(self):
        return {"kind": self.kind, "w": self.w,
                "beta_l1": self.beta_l1.tolist(), "beta_l0": self.beta_l0.tolist(),
                "beta_p1": self.beta_p1.tolist(), "beta_p0": self.beta_p0.tolist()}


class CustomBasis(BasisFamily):
    """Caller-supplied evaluator with declared support; monotonicity is not verified."""

    kind = "custom"

    def __init__(self, d: int, evaluator, support_lo: float, support_hi: float,
                 atoms=None):
        self.d = int(d)
        self.evaluator = evaluator
        self._lo = float(support_lo)
        self._hi = float(support_hi)
        self._atoms = None if atoms is None else np.asarray(atoms, dtype=float)

    def eval_nodes(self, x, ts):
        ts = np.asarray(ts, dtype=float)
        out = np.asarray(self.evaluator(x, ts), dtype=float)
        if out.shape != (self.d, ts.size):
            out = np.stack([np.asarray(self.evaluator(x, np.array([t])), dtype=float).reshape(self.d)
                            for t in ts], axis=1)
        return out

    def support(self, x):
        return (self._lo, self._hi)

    def atoms(self, x):
        return self._atoms


def basis_from_spec(spec: dict) -> BasisFamily:
    kind = spec["kind"]
    if kind == "bernoulli":
        return BernoulliBasis(int(spec["d"]))
    if kind == "polynomial":
        return PolynomialBasis(int(spec["d"]))
    if kind == "gaussian_laplace":
        return GaussianLaplaceBasis(spec["w"], spec["beta_n1"], spec["beta_n0"],
                                    spec["beta_l1"], spec["beta_l0"],
                                    spec["sigma2"], spec["b"])
    if kind == "logistic_probit":
        return LogisticProbitBasis(spec["w"], spec["beta_l1"], spec["beta_l0"],
                                   spec["beta_p1"], spec["beta_p0"])
    raise ValueError(f"unknown basis kind {kind!r}")


def eval_basis(basis: BasisFamily, x, t: float) -> np.ndarray:
    """Phi(x, t) as a (d,) vector in [0,1]^d."""
    return basis.eval(x, t)


def check_simplex(theta, tol: float = 1e-9) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if abs(theta.sum() - 1.0) > tol or theta.min() < -tol:
        raise ValueError("theta is not in the probability simplex")
    return theta


def mixture_cdf_eval(theta, basis: BasisFamily, x, t: float) -> float:
    """F(x, t) = theta^T Phi(x, t) for theta in the simplex."""
    theta = check_simplex(theta)
    return float(np.dot(theta, basis.eval(x, t)))


@dataclass(frozen=True)
class MixtureCdf:
    theta: np.ndarray
    basis: BasisFamily
    context: object

    def __call__(self, t):
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        vals = self.theta @ self.basis.eval_nodes(self.context, ts)
        return float(vals[0]) if np.isscalar(t) else vals


def inverse_cdf_sample(theta, basis: BasisFamily, x, u: float) -> float:
    """Smallest t with theta^T Phi(x, t) >= u, by atom lookup or bisection."""
    if not 0.0 < u < 1.0:
        raise ValueError("u must lie in the open interval (0,1)")
    theta = check_simplex(theta)
    atoms = basis.atoms(x)
    if atoms is not None:
        # Purely discrete family: compare u against cumulative atom masses.
        cdf_at = theta @ basis.eval_nodes(x, atoms)
        for a, c in zip(atoms, cdf_at):
            if u <= c + 1e-15:
                return float(a)
        return float(atoms[-1])

    lo, hi = basis.support(x)
    f = lambda t: float(theta @ basis.eval(x, t))
    # Double outward if the declared support does not yet bracket u.
    span = max(hi - lo, 1.0)
    tries = 0
    while f(hi) < u and tries < 60:
        hi += span
        span *= 2
        tries += 1
    span = max(hi - lo, 1.0)
    while f(lo) >= u and lo > -1e308 and tries < 120:
        lo -= span
        span *= 2
        tries += 1
    if f(hi) < u or f(lo) >= u:
        raise BracketError(f"could not bracket u={u} within search bounds")
    while hi - lo > _BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if f(mid) >= u:
            hi = mid
        else:
            lo = mid
    return hi
