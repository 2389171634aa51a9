"""Sufficient statistics for the ridge estimator.

Accumulates U_n (integrated outer products of the basis vector) and u_n
(integrated empirical-CDF responses) across samples, with a closed-form
fast path for Bernoulli-type bases on the uniform unit interval, plus
exact / Monte Carlo computation of the population Gram.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import measure as msr
from .basis import BasisFamily, BernoulliBasis, LogisticProbitBasis


@dataclass
class GramState:
    d: int
    measure: msr.QuadMeasure
    n: int = 0
    U: np.ndarray = None
    u: np.ndarray = None

    def __post_init__(self):
        if self.U is None:
            self.U = np.zeros((self.d, self.d))
        if self.u is None:
            self.u = np.zeros(self.d)

    def copy(self) -> "GramState":
        return GramState(self.d, self.measure, self.n, self.U.copy(), self.u.copy())

    def merge(self, other: "GramState") -> "GramState":
        if other.d != self.d:
            raise ValueError("dimension mismatch in merge")
        return GramState(self.d, self.measure, self.n + other.n,
                         self.U + other.U, self.u + other.u)


@dataclass
class PopulationGram:
    Sigma: np.ndarray
    n: int
    d: int
    mc_samples: int


def _bernoulli_fast_path(basis: BasisFamily, m: msr.QuadMeasure) -> bool:
    return (isinstance(basis, (BernoulliBasis, LogisticProbitBasis))
            and m.kind == msr.UNIFORM
            and m.params.get("a") == 0.0 and m.params.get("b") == 1.0)


def _q_vector(basis, x) -> np.ndarray:
    if isinstance(basis, BernoulliBasis):
        return 1.0 - basis.probs(x)
    return 1.0 - basis.success_probs(x)


def gram_matrix_of_context(basis: BasisFamily, x, m: msr.QuadMeasure) -> np.ndarray:
    """Integral of Phi(x,t) Phi(x,t)^T against the measure."""
    if _bernoulli_fast_path(basis, m):
        q = _q_vector(basis, x)
        return np.outer(q, q)
    P = basis.eval_nodes(x, m.nodes)
    return (P * m.weights) @ P.T


def response_vector_of_sample(basis: BasisFamily, x, y: float, m: msr.QuadMeasure) -> np.ndarray:
    """Integral of 1{y<=t} Phi(x,t) against the measure, split at the jump."""
    if not np.isfinite(y):
        raise ValueError("outcome y must be finite")
    if _bernoulli_fast_path(basis, m):
        q = _q_vector(basis, x)
        if y <= 0:
            return q.copy()
        if y >= 1:
            return np.zeros(basis.d)
        return q * (1.0 - y)
    ts, ws = msr.jump_panel(y, m)
    if ts.size == 0:
        return np.zeros(basis.d)
    return basis.eval_nodes(x, ts) @ ws


def accumulate(state: GramState, basis: BasisFamily, x, y: float,
               m: msr.QuadMeasure | None = None) -> GramState:
    """Return a new state with one (x, y) sample added."""
    m = state.measure if m is None else m
    if basis.d != state.d:
        raise ValueError(f"basis dimension {basis.d} != state dimension {state.d}")
    U = state.U + gram_matrix_of_context(basis, x, m)
    U = 0.5 * (U + U.T)  # quadrature round-off symmetry guard
    u = state.u + response_vector_of_sample(basis, x, y, m)
    return GramState(state.d, m, state.n + 1, U, u)


def regularized_gram(state: GramState, lam: float) -> np.ndarray:
    """U_n + lambda I."""
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    return state.U + lam * np.eye(state.d)


def population_gram_mc(basis: BasisFamily, context_sampler, m: msr.QuadMeasure,
                       n: int, mc_per_step: int = 1000, seed: int = 0) -> PopulationGram:
    """Population Gram Sigma_n = n * E_x[per-context Gram].

    ``context_sampler`` is either a pair (atoms, probs) of a finite context
    distribution (computed exactly, no Monte Carlo) or a callable
    rng -> context (averaged over ``mc_per_step`` draws).
    """
    if isinstance(context_sampler, tuple) and len(context_sampler) == 2:
        atoms, probs = context_sampler
        probs = np.asarray(probs, dtype=float)
        Sigma_step = sum(p * gram_matrix_of_context(basis, a, m)
                         for a, p in zip(atoms, probs))
        mc = 0
    else:
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
        acc = np.zeros((basis.d, basis.d))
        for _ in range(mc_per_step):
            acc += gram_matrix_of_context(basis, context_sampler(rng), m)
        Sigma_step = acc / mc_per_step
        mc = mc_per_step
    Sigma = n * 0.5 * (Sigma_step + Sigma_step.T)
    return PopulationGram(Sigma=Sigma, n=n, d=basis.d, mc_samples=mc)


def state_to_flat_dict(state: GramState) -> dict:
    """Flat serializable dump for experiment checkpointing."""
    return {"d": state.d, "n": state.n,
            "U": state.U.ravel().tolist(), "u": state.u.tolist(),
            "measure": state.measure.to_json()}


def state_from_flat_dict(payload: dict) -> GramState:
    d = int(payload["d"])
    return GramState(d=d, measure=msr.measure_from_json(payload["measure"]),
                     n=int(payload["n"]),
                     U=np.asarray(payload["U"], dtype=float).reshape(d, d),
                     u=np.asarray(payload["u"], dtype=float))
