"""Sequential Monte Carlo over density-matrix particles.

The posterior is a weighted particle set. Each measurement multiplies the
weights by the outcome likelihood and renormalizes; when the effective sample
size drops below a configured fraction of n the set is rejuvenated by a
Liu-West-style resample: ancestors are drawn by weight, shrunk toward the
posterior mean, and convexly mixed with a fresh Hilbert-Schmidt sample.
Convex mixing keeps every particle a valid state by construction, which is
why no PSD projection appears anywhere in this module.

A pure_preserving mode copies ancestors verbatim (shrinking or mixing would
leave the pure-state manifold); it is meant for priors supported on pure
states where the top-eigenvector estimator is being tracked.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensembles import WeightedEnsemble, _gen, moments, sample_hilbert_schmidt
from .measure import MeasurementRecord, likelihood_many
from .qmat import DensityMatrix

__all__ = [
    "SmcState",
    "ResampleParams",
    "SmcCollapseError",
    "initial_state",
    "bayes_update",
    "effective_sample_size",
    "resample",
    "posterior_mean",
]


class SmcCollapseError(RuntimeError):
    """Every particle assigned zero likelihood: the prior has no support here."""


@dataclass(frozen=True)
class ResampleParams:
    """Liu-West-style resampler knobs.

    a is the shrinkage toward the mean, ess_fraction the ESS/n trigger,
    epsilon the weight of the fresh Hilbert-Schmidt component.
    pure_preserving forces plain ancestor copying (a=1, epsilon=0).
    """

    a: float = 0.98
    ess_fraction: float = 0.5
    epsilon: float = 0.01
    pure_preserving: bool = False

    def __post_init__(self) -> None:
        if not 0.0 < self.a <= 1.0:
            raise ValueError(f"shrinkage a must be in (0, 1], got {self.a}")
        if not 0.0 <= self.ess_fraction <= 1.0:
            raise ValueError(f"ess_fraction must be in [0, 1], got {self.ess_fraction}")
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError(f"epsilon must be in [0, 1), got {self.epsilon}")


@dataclass(frozen=True)
class SmcState:
    """Posterior particle set plus update/resample bookkeeping."""

    ensemble: WeightedEnsemble
    steps: int = 0
    resample_count: int = 0
    ess_history: tuple = ()


def initial_state(ensemble: WeightedEnsemble) -> SmcState:
    return SmcState(ensemble=ensemble)


def effective_sample_size(e: WeightedEnsemble) -> float:
    """ESS = 1 / sum of squared weights, in (0, n]."""
    return float(1.0 / np.sum(e.weights**2))


def bayes_update(
    state: SmcState,
    record: MeasurementRecord,
    rng=None,
    params: ResampleParams | None = None,
) -> SmcState:
    """Multiply weights by the record's likelihood and renormalize.

    Appends the post-update ESS to the history. When an rng is supplied and
    the ESS falls below ess_fraction * n, the returned state is additionally
    resampled; pass rng=None to disable resampling entirely. Raises
    SmcCollapseError if every particle has zero likelihood.
    """
    e = state.ensemble
    lik = likelihood_many(record, e.particles)
    w = e.weights * lik
    z = float(w.sum())
    if z <= 0.0:
        raise SmcCollapseError(
            f"all {len(e)} particles have zero likelihood at step {state.steps + 1} "
            f"({record.kind} record): the particle set has collapsed"
        )
    w = w / z
    w = w / w.sum()  # second pass pins the sum to 1 at machine precision
    updated = WeightedEnsemble(e.particles, w, validate=False)
    ess = effective_sample_size(updated)
    new_state = SmcState(
        ensemble=updated,
        steps=state.steps + 1,
        resample_count=state.resample_count,
        ess_history=state.ess_history + (ess,),
    )
    if params is None:
        params = ResampleParams()
    if rng is not None and ess < params.ess_fraction * len(e):
        new_state = resample(new_state, rng, params)
    return new_state


def resample(state: SmcState, rng, params: ResampleParams | None = None) -> SmcState:
    """Draw n fresh equal-weight particles around the current posterior.

    Each new particle is (1-eps) * (a * ancestor + (1-a) * mean) + eps * fresh
    with the ancestor multinomially chosen by weight and fresh a
    Hilbert-Schmidt draw; every output is a convex combination of states. In
    pure_preserving mode ancestors are copied unchanged.
    """
    if params is None:
        params = ResampleParams()
    e = state.ensemble
    gen = _gen(rng)
    n = len(e)
    ancestors = gen.choice(n, size=n, p=e.weights)
    stack = e.particles[ancestors]
    if not params.pure_preserving:
        a, eps = params.a, params.epsilon
        if a < 1.0:
            mean = moments(e).mean.mat
            stack = a * stack + (1.0 - a) * mean
        if eps > 0.0:
            fresh = sample_hilbert_schmidt(e.dim, gen, size=n)
            stack = (1.0 - eps) * stack + eps * fresh
    new_ensemble = WeightedEnsemble(stack, None, validate=False)
    return SmcState(
        ensemble=new_ensemble,
        steps=state.steps,
        resample_count=state.resample_count + 1,
        ess_history=state.ess_history,
    )


def posterior_mean(state: SmcState) -> DensityMatrix:
    """Weighted particle mean, validated as a state.

    Shares the moments code path so the value is bitwise identical to
    moments(ensemble).mean.
    """
    return DensityMatrix(moments(state.ensemble).mean.mat)
