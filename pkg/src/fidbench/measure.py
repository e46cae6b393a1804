"""Simulated single-shot measurements and their likelihood kernels.

Two measurement models:

* covariant rank-1: the outcome is itself a pure state direction, drawn from
  the density d <psi|rho|psi> relative to the Haar measure. Sampling is exact
  in two steps: pick an eigenvector index of rho with probability its
  eigenvalue, then draw squared overlaps from a Dirichlet law tilted toward
  that index (Gamma shape 2 there, 1 elsewhere), attach uniform phases, and
  rotate back out of the eigenbasis.
* haar_basis: a Haar-random orthonormal basis is measured projectively and
  the outcome index is Born-sampled.

Likelihoods drop the constant POVM normalization d since the particle filter
renormalizes weights anyway.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .ensembles import RngStream, _gen, sample_haar_unitary
from .qmat import DensityMatrix, eigh

__all__ = [
    "MeasurementRecord",
    "simulate_covariant_shot",
    "simulate_basis_shot",
    "likelihood",
    "likelihood_many",
    "record_to_dict",
    "record_from_dict",
    "records_to_jsonl",
    "records_from_jsonl",
]

COVARIANT = "covariant_rank1"
HAAR_BASIS = "haar_basis"


@dataclass(frozen=True)
class MeasurementRecord:
    """One measurement outcome.

    kind "covariant_rank1" carries the outcome direction; kind "haar_basis"
    carries the measured basis and the outcome index.
    """

    kind: str
    direction: np.ndarray | None = None
    basis: np.ndarray | None = None
    outcome_index: int | None = None

    def __post_init__(self) -> None:
        if self.kind == COVARIANT:
            if self.direction is None:
                raise ValueError("covariant record needs a direction")
            v = np.asarray(self.direction, dtype=np.complex128)
            if v.ndim != 1:
                raise ValueError(f"direction must be a vector, got shape {v.shape}")
            if abs(np.linalg.norm(v) - 1.0) > 1e-10:
                raise ValueError(f"direction norm {np.linalg.norm(v)!r} is not 1 within 1e-10")
            v.setflags(write=False)
            object.__setattr__(self, "direction", v)
        elif self.kind == HAAR_BASIS:
            if self.basis is None or self.outcome_index is None:
                raise ValueError("basis record needs a basis and an outcome index")
            b = np.asarray(self.basis, dtype=np.complex128)
            d = b.shape[0]
            if b.shape != (d, d):
                raise ValueError(f"basis must be square, got shape {b.shape}")
            if np.max(np.abs(b @ b.conj().T - np.eye(d))) > 1e-10:
                raise ValueError("basis is not unitary within 1e-10")
            k = int(self.outcome_index)
            if not 0 <= k < d:
                raise ValueError(f"outcome index {k} outside [0, {d})")
            b.setflags(write=False)
            object.__setattr__(self, "basis", b)
            object.__setattr__(self, "outcome_index", k)
        else:
            raise ValueError(f"unknown measurement kind {self.kind!r}")

    @property
    def dim(self) -> int:
        if self.kind == COVARIANT:
            return self.direction.shape[0]
        return self.basis.shape[0]


def simulate_covariant_shot(true_state: DensityMatrix, rng: RngStream) -> MeasurementRecord:
    """Draw one outcome direction of the uniform rank-1 POVM on true_state.

    Exact two-step sampler: eigenindex i with probability lambda_i, squared
    magnitudes from Gamma variates (shape 2 on coordinate i, shape 1
    elsewhere, normalized), i.i.d. uniform phases, rotated back to the
    original basis.
    """
    if not isinstance(true_state, DensityMatrix):
        true_state = DensityMatrix(np.asarray(true_state))
    gen = _gen(rng)
    dec = eigh(true_state.mat)
    lam = np.clip(dec.eigenvalues, 0.0, None)
    lam = lam / lam.sum()
    d = lam.shape[0]
    i = int(gen.choice(d, p=lam))
    shape = np.ones(d)
    shape[i] = 2.0
    g = gen.standard_gamma(shape)
    q = g / g.sum()
    theta = gen.uniform(0.0, 2.0 * np.pi, size=d)
    psi_eig = np.sqrt(q) * np.exp(1j * theta)
    psi = dec.eigenvectors @ psi_eig
    psi = psi / np.linalg.norm(psi)
    return MeasurementRecord(kind=COVARIANT, direction=psi)


def simulate_basis_shot(
    true_state: DensityMatrix, rng: RngStream, basis: np.ndarray | None = None
) -> MeasurementRecord:
    """Measure true_state in a Haar-random orthonormal basis.

    Columns of the basis are the projectors' directions; the outcome index is
    Born-sampled. Pass an explicit basis to bypass the Haar draw (test hook).
    """
    if not isinstance(true_state, DensityMatrix):
        true_state = DensityMatrix(np.asarray(true_state))
    gen = _gen(rng)
    d = true_state.dim
    if basis is None:
        basis = sample_haar_unitary(d, gen)
    else:
        basis = np.asarray(basis, dtype=np.complex128)
    probs = np.einsum("id,ij,jd->d", basis.conj(), true_state.mat, basis).real
    probs = np.clip(probs, 0.0, None)
    probs = probs / probs.sum()
    k = int(gen.choice(d, p=probs))
    return MeasurementRecord(kind=HAAR_BASIS, basis=basis, outcome_index=k)


def _record_direction(record: MeasurementRecord) -> np.ndarray:
    if record.kind == COVARIANT:
        return record.direction
    return record.basis[:, record.outcome_index]


def likelihood(record: MeasurementRecord, particle: DensityMatrix) -> float:
    """Single-outcome likelihood <psi|rho|psi>, clamped to [0, 1]."""
    mat = particle.mat if isinstance(particle, DensityMatrix) else np.asarray(particle)
    v = _record_direction(record)
    if v.shape[0] != mat.shape[0]:
        raise ValueError(f"dimension mismatch: record {v.shape[0]}, particle {mat.shape[0]}")
    val = float(np.vdot(v, mat @ v).real)
    return min(max(val, 0.0), 1.0)


def likelihood_many(record: MeasurementRecord, stack: np.ndarray) -> np.ndarray:
    """Likelihoods for a whole (n, d, d) particle stack in one pass."""
    v = _record_direction(record)
    if v.shape[0] != stack.shape[-1]:
        raise ValueError(f"dimension mismatch: record {v.shape[0]}, stack {stack.shape[-1]}")
    vals = np.einsum("i,nij,j->n", v.conj(), stack, v).real
    return np.clip(vals, 0.0, 1.0)


def record_to_dict(record: MeasurementRecord) -> dict:
    if record.kind == COVARIANT:
        return {
            "kind": COVARIANT,
            "psi_re": record.direction.real.tolist(),
            "psi_im": record.direction.imag.tolist(),
        }
    return {
        "kind": HAAR_BASIS,
        "basis_re": record.basis.real.tolist(),
        "basis_im": record.basis.imag.tolist(),
        "k": record.outcome_index,
    }


def record_from_dict(row: dict) -> MeasurementRecord:
    kind = row.get("kind")
    if kind == COVARIANT:
        psi = np.asarray(row["psi_re"], dtype=float) + 1j * np.asarray(row["psi_im"], dtype=float)
        return MeasurementRecord(kind=COVARIANT, direction=psi)
    if kind == HAAR_BASIS:
        basis = np.asarray(row["basis_re"], dtype=float) + 1j * np.asarray(
            row["basis_im"], dtype=float
        )
        return MeasurementRecord(kind=HAAR_BASIS, basis=basis, outcome_index=int(row["k"]))
    raise ValueError(f"unknown measurement kind {kind!r}")


def records_to_jsonl(records, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(record_to_dict(rec)) + "\n")


def records_from_jsonl(path) -> list:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            out.append(record_from_dict(json.loads(line)))
    return out
