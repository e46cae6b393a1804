"""Upper bounds on the average fidelity achievable by any estimator.

Everything here is a pure function of ensemble moments. Three bounds are
computed, in decreasing order of looseness:

* a variance bound, 1 - (1/4) [Tr E[rho^2] - Tr E[rho]^2];
* an analytic super-fidelity bound with its closed-form optimizer sigma_sharp,
  which may or may not be a valid state;
* the exact optimum of the commutative program
  max over the simplex of sum_i r_i s_i + p sqrt(1 - sum_i s_i^2),
  solved by an active-set sweep over sorted support sizes.

When every particle in the ensemble is pure the top eigenvector of the mean
is the optimal estimator and its eigenvalue the exact optimum; that path is
dispatched on p_rho == 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ensembles import EnsembleMoments, WeightedEnsemble, moments
from .qmat import DensityMatrix, HermitianMatrix, eigh

__all__ = [
    "BoundReport",
    "SimplexSolution",
    "theorem1_pure_optimum",
    "theorem2_fvg_bound",
    "theorem3_analytic_bound",
    "exact_commutative_solver",
    "bagan_qubit_bound",
    "compute_bound_report",
    "pure_optimum",
    "variance_bound",
    "analytic_super_bound",
]

SLACK_TOL = 1e-12  # complementary slackness: s_k > tol, r_{k+1} + lambda <= tol
STATE_EIG_TOL = 1e-10


def _clamp01(x: float) -> float:
    return min(max(float(x), 0.0), 1.0)


@dataclass(frozen=True)
class SimplexSolution:
    """Maximizer of sum r_i s_i + p sqrt(1 - sum s_i^2) over the simplex.

    s is in the caller's index order; support lists the active indices.
    lagrange_lambda is the multiplier of the sum-to-one constraint and beta
    the positive scale p / sqrt(1 - sum s_i^2) (infinite at a vertex).
    """

    s: np.ndarray
    value: float
    support: tuple
    lagrange_lambda: float
    beta: float


@dataclass(frozen=True)
class BoundReport:
    """All bounds for one ensemble, plus the optimizer diagnostics.

    pure_optimum is None unless every particle is pure (p_rho == 0).
    mean_estimator_posterior_value is the super-fidelity objective evaluated
    at the ensemble mean itself, i.e. what the mean estimator scores against
    the posterior; it is a lower bound on super_exact_bound.
    """

    pure_optimum: float | None
    fvg_bound: float
    super_analytic_bound: float
    super_exact_bound: float
    sigma_sharp: HermitianMatrix
    sigma_sharp_is_state: bool
    mean_estimator_posterior_value: float

    def to_json_dict(self) -> dict:
        return {
            "pure_optimum": self.pure_optimum,
            "fvg_bound": self.fvg_bound,
            "super_analytic_bound": self.super_analytic_bound,
            "super_exact_bound": self.super_exact_bound,
            "sigma_sharp_is_state": self.sigma_sharp_is_state,
            "mean_estimator_value": self.mean_estimator_posterior_value,
        }


def theorem1_pure_optimum(m: EnsembleMoments):
    """Exact optimum for pure-support ensembles: top eigenpair of the mean.

    Returns (value, estimator) where value is the operator norm of the mean
    and the estimator the projector onto its leading eigenvector. Ties take
    the first eigenvector in stable descending order. Raises on mixed
    support; the bound is only exact when every particle is pure.
    """
    if m.p_rho > 0.0:
        raise ValueError(f"pure-support optimum called with p_rho={m.p_rho!r} > 0")
    dec = eigh(m.mean.mat)
    v = dec.eigenvectors[:, 0]
    estimator = DensityMatrix(np.outer(v, v.conj()))
    return float(dec.eigenvalues[0]), estimator


def pure_optimum(m: EnsembleMoments):
    """Alias for theorem1_pure_optimum."""
    return theorem1_pure_optimum(m)


def theorem2_fvg_bound(m: EnsembleMoments) -> float:
    """Variance bound: 1 - (1/4) [Tr E[rho^2] - Tr E[rho]^2], clamped to [0,1]."""
    mean = m.mean.mat
    tr_mean_sq = float(np.vdot(mean, mean).real)
    variance = m.mean_square.trace() - tr_mean_sq
    return _clamp01(1.0 - 0.25 * variance)


def variance_bound(m: EnsembleMoments) -> float:
    """Alias for theorem2_fvg_bound."""
    return theorem2_fvg_bound(m)


def theorem3_analytic_bound(m: EnsembleMoments, d: int):
    """Analytic super-fidelity bound and its closed-form optimizer.

    bound = (1/d) (1 + sqrt(d-1) sqrt(d (p^2 + Tr rhohat^2) - 1))
    sigma_sharp = 1/d + sqrt((d-1)/(d (p^2 + Tr rhohat^2) - 1)) (rhohat - 1/d)

    Returns (bound, sigma_sharp, is_state). The square-root argument is
    non-negative up to rounding and is clamped at 0; when it vanishes the
    mean is maximally mixed with pure support and sigma_sharp degenerates to
    the maximally mixed state. sigma_sharp has unit trace and commutes with
    the mean by construction, but can have negative eigenvalues; is_state
    reports whether it clears -1e-10.
    """
    d = int(d)
    if d < 2:
        raise ValueError(f"dimension must be at least 2, got {d}")
    if m.mean.dim != d:
        raise ValueError(f"moments have dimension {m.mean.dim}, expected {d}")
    mean = m.mean.mat
    q = float(np.vdot(mean, mean).real)
    p = m.p_rho
    arg = max(0.0, d * (p * p + q) - 1.0)
    bound = _clamp01((1.0 + math.sqrt(d - 1.0) * math.sqrt(arg)) / d)
    eye = np.eye(d) / d
    if arg <= 0.0:
        sharp = HermitianMatrix(eye)
    else:
        sharp = HermitianMatrix(eye + math.sqrt((d - 1.0) / arg) * (mean - eye))
    wmin = float(np.linalg.eigvalsh(sharp.mat)[0])
    return bound, sharp, bool(wmin >= -STATE_EIG_TOL)


def analytic_super_bound(m: EnsembleMoments, d: int):
    """Alias for theorem3_analytic_bound."""
    return theorem3_analytic_bound(m, d)


def bagan_qubit_bound(m: EnsembleMoments) -> float:
    """Qubit closed form (1/2)(1 + sqrt(2 (p^2 + Tr rhohat^2) - 1)).

    Coincides with the analytic bound at d = 2, where the super-fidelity
    equals the fidelity and the bound is attained.
    """
    if m.mean.dim != 2:
        raise ValueError(f"qubit bound needs d=2, got d={m.mean.dim}")
    mean = m.mean.mat
    q = float(np.vdot(mean, mean).real)
    arg = max(0.0, 2.0 * (m.p_rho ** 2 + q) - 1.0)
    return _clamp01(0.5 * (1.0 + math.sqrt(arg)))


def _vertex_solution(r: np.ndarray, order: np.ndarray) -> SimplexSolution:
    # Vertex limit: all mass on the largest r_i; beta -> inf, lambda = -r_max.
    d = r.shape[0]
    s = np.zeros(d)
    top = int(order[0])
    s[top] = 1.0
    return SimplexSolution(
        s=s,
        value=float(r[top]),
        support=(top,),
        lagrange_lambda=float(-r[top]),
        beta=math.inf,
    )


def exact_commutative_solver(r, p: float) -> SimplexSolution:
    """Global maximum of sum r_i s_i + p sqrt(1 - sum s_i^2) over the simplex.

    Active-set sweep: with r sorted descending, try support sizes k = d down
    to 2. For each k the stationarity conditions give

        beta^2 = (k (p^2 + Q_k) - R_k^2) / (k - 1)
        lambda = (beta - R_k) / k
        s_i    = 1/k + (r_i - R_k/k) / beta     for i <= k

    with R_k, Q_k the partial sum and sum of squares. The first k whose
    solution has s_k > 0 and r_{k+1} + lambda <= 0 (complementary slackness,
    at 1e-12 tolerance) is the global optimum; for p = 0 the objective is
    linear and the top vertex wins. Input order does not matter: r is sorted
    internally and the solution is returned in the caller's order.
    """
    r = np.asarray(r, dtype=np.float64)
    if r.ndim != 1 or r.shape[0] < 1:
        raise ValueError(f"expected a 1-D spectrum, got shape {r.shape}")
    if np.any(r < -SLACK_TOL):
        raise ValueError(f"spectrum has negative entry {r.min()!r}")
    total = float(r.sum())
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"spectrum sums to {total!r}, expected 1 within 1e-9")
    p = float(p)
    if p < 0.0:
        raise ValueError(f"p must be non-negative, got {p}")

    d = r.shape[0]
    order = np.argsort(-r, kind="stable")
    rs = r[order]

    if p == 0.0 or d == 1:
        sol = _vertex_solution(r, order)
    else:
        sol = None
        cum_r = np.cumsum(rs)
        cum_q = np.cumsum(rs * rs)
        for k in range(d, 1, -1):
            R = float(cum_r[k - 1])
            Q = float(cum_q[k - 1])
            # Cauchy-Schwarz gives k*Q >= R^2; clamp the difference so rounding
            # cannot push beta^2 below k*p^2 / (k-1).
            spread = max(0.0, k * Q - R * R)
            beta = math.sqrt((k * p * p + spread) / (k - 1.0))
            lam = (beta - R) / k
            s_active = 1.0 / k + (rs[:k] - R / k) / beta
            if s_active[-1] <= SLACK_TOL:
                continue
            if k < d and rs[k] + lam > SLACK_TOL:
                continue
            s_sorted = np.zeros(d)
            s_sorted[:k] = s_active
            s = np.zeros(d)
            s[order] = s_sorted
            # evaluate on the sorted arrays so the value is bitwise identical
            # for any permutation of the input
            value = float(
                rs @ s_sorted + p * math.sqrt(max(0.0, 1.0 - float(s_sorted @ s_sorted)))
            )
            sol = SimplexSolution(
                s=s,
                value=value,
                support=tuple(sorted(int(i) for i in order[:k])),
                lagrange_lambda=float(lam),
                beta=float(beta),
            )
            break
        if sol is None:
            # Unreachable for p > 0 (the sqrt has infinite slope at the sphere),
            # kept as a numerical safety net.
            sol = _vertex_solution(r, order)
    return sol


def compute_bound_report(e: WeightedEnsemble, m: EnsembleMoments | None = None) -> BoundReport:
    """All bounds for one ensemble in a single report.

    The exact bound solves the commutative program on the spectrum of the
    ensemble mean with p = p_rho; the pure-support optimum is attached iff
    p_rho == 0. Pass precomputed moments to skip recomputing them.
    """
    if m is None:
        m = moments(e)
    d = e.dim
    fvg = theorem2_fvg_bound(m)
    analytic, sharp, is_state = theorem3_analytic_bound(m, d)

    spectrum = np.clip(eigh(m.mean.mat).eigenvalues, 0.0, None)
    exact = exact_commutative_solver(spectrum, m.p_rho)
    exact_bound = _clamp01(exact.value)

    pure_val = None
    if m.p_rho == 0.0:
        pure_val, _ = theorem1_pure_optimum(m)

    q = float(np.vdot(m.mean.mat, m.mean.mat).real)
    mean_value = _clamp01(q + m.p_rho * math.sqrt(max(0.0, 1.0 - q)))

    return BoundReport(
        pure_optimum=pure_val,
        fvg_bound=fvg,
        super_analytic_bound=analytic,
        super_exact_bound=exact_bound,
        sigma_sharp=sharp,
        sigma_sharp_is_state=is_state,
        mean_estimator_posterior_value=mean_value,
    )
