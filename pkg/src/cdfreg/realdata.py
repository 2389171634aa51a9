"""Tabular pipeline: ingestion, univariate basis fitting, and CRPS evaluation.

Fits per-feature location models (OLS/Gaussian, LAD/Laplace, logistic,
probit) on a first split, the mixture weights on a second, and reports
L2/CRPS errors against ECDF (and, for discrete outcomes, simplex-MLE)
baselines on a held-out third split.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from . import measure as msr
from .basis import GaussianLaplaceBasis, LogisticProbitBasis
from .bounds import l2_error_crps
from .estimators import ecdf, fit_mle_simplex, project_simplex, ridge_estimate
from .gram import GramState, accumulate
from .synth import stream_rng

_GLM_COEF_CAP = 30.0


@dataclass
class TabularDataset:
    features: np.ndarray      # (n, d), standardized
    outcomes: np.ndarray      # (n,)
    feature_names: list
    outcome_name: str
    dropped_rows: int = 0


@dataclass
class UnivariateFit:
    model: str                # OLS | LAD | Logistic | Probit
    coef: float
    intercept: float
    scale: float = float("nan")
    separated: bool = False


def standardize(column: np.ndarray) -> np.ndarray:
    """Mean 0, variance 1 (population denominator)."""
    col = np.asarray(column, dtype=float)
    sd = col.std()
    if sd == 0:
        raise ValueError("cannot standardize a constant column")
    return (col - col.mean()) / sd


def load_csv(path, outcome: str, features=None, delimiter=",") -> TabularDataset:
    """Read a headered CSV, drop rows with missing values, standardize features."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh, delimiter=delimiter)
        rows = list(reader)
    if not rows:
        raise ValueError(f"no data rows in {path}")
    if features is None:
        features = [c for c in rows[0].keys() if c != outcome]
    if outcome not in rows[0]:
        raise ValueError(f"outcome column {outcome!r} not found")

    kept, dropped = [], 0
    for row in rows:
        try:
            vals = [float(row[c]) for c in features + [outcome]]
        except (ValueError, TypeError, KeyError):
            dropped += 1
            continue
        if not all(math.isfinite(v) for v in vals):
            dropped += 1
            continue
        kept.append(vals)
    arr = np.asarray(kept, dtype=float)
    X = np.column_stack([standardize(arr[:, i]) for i in range(len(features))])
    return TabularDataset(X, arr[:, -1], list(features), outcome, dropped)


def three_way_split(n: int, seed: int):
    """Seeded permutation split into fractions 1/3, 1/2, remainder."""
    if n < 6:
        raise ValueError("need at least 6 rows to split")
    perm = stream_rng(seed, 0x5711).permutation(n)
    n1, n2 = n // 3, n // 2
    return perm[:n1], perm[n1:n1 + n2], perm[n1 + n2:]


def fit_ols_univariate(xs, ys) -> UnivariateFit:
    """Closed-form least squares; scale is the residual variance (denominator n)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if np.ptp(xs) == 0:
        raise ValueError("OLS needs at least two distinct x values")
    coef, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (coef * xs + intercept)
    return UnivariateFit("OLS", float(coef), float(intercept), float(np.mean(resid ** 2)))


def _lad_objective(xs, ys, a, b):
    return float(np.sum(np.abs(ys - a * xs - b)))


def fit_lad_univariate(xs, ys, max_iter: int = 200, tol: float = 1e-10) -> UnivariateFit:
    """Least absolute residual line via IRLS with a coordinate-descent polish."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if np.ptp(xs) == 0:
        raise ValueError("LAD needs at least two distinct x values")
    a, b = np.polyfit(xs, ys, 1)
    X = np.column_stack([xs, np.ones_like(xs)])
    prev = _lad_objective(xs, ys, a, b)
    for _ in range(max_iter):
        w = 1.0 / np.maximum(np.abs(ys - a * xs - b), 1e-8)
        WX = X * w[:, None]
        sol = np.linalg.solve(X.T @ WX, WX.T @ ys)
        a, b = float(sol[0]), float(sol[1])
        cur = _lad_objective(xs, ys, a, b)
        if prev - cur < tol * (1.0 + cur):
            break
        prev = cur
    # Coordinate polish: IRLS can stall short of the piecewise-linear optimum.
    step = max(np.std(ys), 1.0) * 1e-2
    obj = _lad_objective(xs, ys, a, b)
    while step > 1e-12:
        improved = False
        for da, db in ((step, 0), (-step, 0), (0, step), (0, -step)):
            cand = _lad_objective(xs, ys, a + da, b + db)
            if cand < obj - 1e-15:
                a, b, obj = a + da, b + db, cand
                improved = True
        if not improved:
            step *= 0.5
    resid = ys - (a * xs + b)
    return UnivariateFit("LAD", a, b, float(np.mean(np.abs(resid))))


def fit_glm_univariate(xs, ys, link: str, max_iter: int = 100,
                       tol: float = 1e-8) -> UnivariateFit:
    """Newton-Raphson for a univariate logistic or probit regression."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if not set(np.unique(ys)) <= {0.0, 1.0}:
        raise ValueError("GLM outcome must be binary 0/1")
    if np.all(ys == ys[0]):
        raise ValueError("GLM needs both outcome classes present")
    if link not in ("Logistic", "Probit"):
        raise ValueError(f"unknown link {link!r}")
    X = np.column_stack([xs, np.ones_like(xs)])
    beta = np.zeros(2)
    separated = False
    for _ in range(max_iter):
        eta = X @ beta
        if link == "Logistic":
            mu = 1.0 / (1.0 + np.exp(-eta))
            grad = X.T @ (ys - mu)
            w = mu * (1.0 - mu)
        else:
            mu = ndtr(eta)
            pdf = np.exp(-0.5 * eta ** 2) / math.sqrt(2 * math.pi)
            mu_c = np.clip(mu, 1e-12, 1 - 1e-12)
            grad = X.T @ (pdf * (ys - mu_c) / (mu_c * (1.0 - mu_c)))
            w = pdf ** 2 / (mu_c * (1.0 - mu_c))
        H = X.T @ (X * w[:, None])
        try:
            delta = np.linalg.solve(H + 1e-12 * np.eye(2), grad)
        except np.linalg.LinAlgError:
            break
        beta = beta + delta
        if np.any(np.abs(beta) > _GLM_COEF_CAP):
            beta = np.clip(beta, -_GLM_COEF_CAP, _GLM_COEF_CAP)
            separated = True
            break
        if np.linalg.norm(grad) <= tol:
            break
    return UnivariateFit(link, float(beta[0]), float(beta[1]),
                         separated=separated)


def fit_gaussian_laplace_basis(X, y, w: float) -> GaussianLaplaceBasis:
    """Per-feature OLS and LAD fits assembled into the mixture basis."""
    d = X.shape[1]
    bn1, bn0, bl1, bl0, s2, b = (np.empty(d) for _ in range(6))
    for i in range(d):
        ols = fit_ols_univariate(X[:, i], y)
        lad = fit_lad_univariate(X[:, i], y)
        bn1[i], bn0[i] = ols.coef, ols.intercept
        bl1[i], bl0[i] = lad.coef, lad.intercept
        s2[i] = max(ols.scale, 1e-8)
        b[i] = max(lad.scale, 1e-8)
    return GaussianLaplaceBasis(w, bn1, bn0, bl1, bl0, s2, b)


def fit_logistic_probit_basis(X, y, w: float) -> LogisticProbitBasis:
    d = X.shape[1]
    bl1, bl0, bp1, bp0 = (np.empty(d) for _ in range(4))
    for i in range(d):
        logi = fit_glm_univariate(X[:, i], y, "Logistic")
        prob = fit_glm_univariate(X[:, i], y, "Probit")
        bl1[i], bl0[i] = logi.coef, logi.intercept
        bp1[i], bp0[i] = prob.coef, prob.intercept
    return LogisticProbitBasis(w, bl1, bl0, bp1, bp0)


def _fit_theta(basis, X, y, m, lam):
    state = GramState(basis.d, m)
    for xrow, yv in zip(X, y):
        state = accumulate(state, basis, xrow, yv, m)
    return ridge_estimate(state, lam)


def evaluate_pipeline(config) -> dict:
    """Fit basis parameters, mixture weights, and baselines; report test CRPS rows."""
    data = load_csv(config["csv_path"], config["outcome"],
                    config.get("features"), config.get("delimiter", ","))
    m = msr.measure_from_spec(config["measure"])
    basis_kind = config["basis"]["kind"]
    w = float(config["basis"].get("w", 0.0))
    lambdas = [float(l) for l in config["lambdas"]]
    seeds = config.get("seeds")
    if seeds is None:
        base = int(config.get("seed", 0))
        seeds = [base + k for k in range(int(config.get("n_seeds", 1)))]

    discrete = basis_kind == "logistic_probit"
    rows, errors = [], []
    for seed in seeds:
        try:
            i_fit, i_train, i_test = three_way_split(len(data.outcomes), seed)
            Xf, yf = data.features[i_fit], data.outcomes[i_fit]
            Xr, yr = data.features[i_train], data.outcomes[i_train]
            Xt, yt = data.features[i_test], data.outcomes[i_test]

            if basis_kind == "gaussian_laplace":
                basis = fit_gaussian_laplace_basis(Xf, yf, w)
            elif basis_kind == "logistic_probit":
                basis = fit_logistic_probit_basis(Xf, yf, w)
            else:
                raise ValueError(f"unknown pipeline basis kind {basis_kind!r}")

            test_pairs = list(zip(Xt, yt))
            for lam in lambdas:
                theta = _fit_theta(basis, Xr, yr, m, lam)
                proj = project_simplex(theta)
                F_hat = lambda x, ts, _p=proj: _p @ basis.eval_nodes(x, np.atleast_1d(ts))
                err = l2_error_crps(test_pairs, F_hat, m)
                rows.append({"method": "ridge_projected", "lambda": lam,
                             "seed": seed, "l2_error": err})

            F_e = ecdf(yr)
            err_e = l2_error_crps(test_pairs, lambda x, ts: F_e(ts), m)
            rows.append({"method": "ecdf", "lambda": float("nan"),
                         "seed": seed, "l2_error": err_e})

            if discrete:
                theta_mle = fit_mle_simplex(list(zip(Xr, yr)), basis)
                F_mle = lambda x, ts: theta_mle @ basis.eval_nodes(x, np.atleast_1d(ts))
                err_m = l2_error_crps(test_pairs, F_mle, m)
                rows.append({"method": "mle_simplex", "lambda": float("nan"),
                             "seed": seed, "l2_error": err_m})
            else:
                rows.append({"method": "mle_simplex", "lambda": float("nan"),
                             "seed": seed, "l2_error": float("nan"),
                             "unsupported": "continuous outcome"})
        except Exception as exc:  # per-seed failures reported, pipeline continues
            errors.append({"seed": seed, "error": f"{type(exc).__name__}: {exc}"})

    summary = {}
    for method in sorted({r["method"] for r in rows}):
        vals = [r["l2_error"] for r in rows
                if r["method"] == method and math.isfinite(r["l2_error"])]
        if vals:
            summary[method] = {"mean": float(np.mean(vals)),
                               "q05": float(np.quantile(vals, 0.05)),
                               "q50": float(np.quantile(vals, 0.50)),
                               "q95": float(np.quantile(vals, 0.95))}
    return {"rows": rows, "summary": summary, "failures": errors,
            "dropped_rows": data.dropped_rows, "n": int(len(data.outcomes))}


def write_report_csv(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "lambda", "seed", "l2_error"])
        for r in rows:
            writer.writerow([r["method"], repr(float(r["lambda"])), r["seed"],
                             repr(float(r["l2_error"]))])
