"""Dense complex Hermitian matrix core: density operators, eigendecompositions,
fidelity, super-fidelity, purity and Schatten norms.

All matrices are double-precision complex (complex128). Constructors
symmetrize their input as (A + A†)/2 before validating, so accumulated
floating-point asymmetry from matrix products never reaches the invariant
checks. Eigenvalues in [-1e-9, 0) are treated as zero; anything below that
floor signals an invalid state and raises.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "HermitianMatrix",
    "DensityMatrix",
    "EigDecomposition",
    "eigh",
    "fidelity",
    "super_fidelity",
    "purity",
    "schatten_norm",
    "trace_product",
]

# PSD floor: eigenvalues in [-EIG_FLOOR, 0) are clamped to zero, below it we raise.
EIG_FLOOR = 1e-9
TRACE_TOL = 1e-10
_EPS = float(np.finfo(np.float64).eps)


def symmetrize(a: np.ndarray) -> np.ndarray:
    """Hermitian part (A + A†)/2; works on stacked (..., d, d) arrays."""
    return (a + np.conj(np.swapaxes(a, -1, -2))) / 2.0


@dataclass(frozen=True)
class HermitianMatrix:
    """A d x d complex matrix, symmetrized at construction."""

    mat: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.mat, dtype=np.complex128)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {arr.shape}")
        arr = symmetrize(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "mat", arr)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.mat).real)


@dataclass(frozen=True)
class DensityMatrix(HermitianMatrix):
    """Unit-trace, positive-semidefinite Hermitian matrix (a quantum state).

    Trace must equal 1 within 1e-10 and the minimum eigenvalue must not fall
    below -1e-9; both checked at construction.
    """

    def __post_init__(self) -> None:
        super().__post_init__()
        tr = np.trace(self.mat).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace {tr!r} is not 1 within {TRACE_TOL}")
        wmin = float(np.linalg.eigvalsh(self.mat)[0])
        if wmin < -EIG_FLOOR:
            raise ValueError(
                f"density matrix has eigenvalue {wmin!r} below the -{EIG_FLOOR} floor"
            )


@dataclass(frozen=True)
class EigDecomposition:
    """Eigenvalues in descending order with matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _as_array(x) -> np.ndarray:
    if isinstance(x, HermitianMatrix):
        return x.mat
    return symmetrize(np.asarray(x, dtype=np.complex128))


def eigh(x) -> EigDecomposition:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Ties keep the underlying LAPACK order (stable descending sort), so the
    result is deterministic for a fixed input.
    """
    a = _as_array(x)
    w, v = np.linalg.eigh(a)
    order = np.argsort(-w, kind="stable")
    w = np.ascontiguousarray(w[order])
    v = np.ascontiguousarray(v[:, order])
    return EigDecomposition(eigenvalues=w, eigenvectors=v)


def _clip_spectrum(w: np.ndarray, d: int) -> np.ndarray:
    """Zero eigenvalues indistinguishable from rounding noise; raise below -1e-9.

    Inputs are trace-normalized, so eigendecomposition noise sits near d*eps
    in absolute terms. Without this floor the square root amplifies ~1e-16
    noise into ~1e-8 errors on rank-deficient states.
    """
    if w[0] < -EIG_FLOOR:
        raise ValueError(f"eigenvalue {w[0]!r} below the -{EIG_FLOOR} floor")
    noise = 8.0 * d * _EPS
    return np.where(w < noise, 0.0, w)


def _psd_sqrt(a: np.ndarray) -> np.ndarray:
    """Matrix square root of a PSD Hermitian matrix via eigendecomposition."""
    w, v = np.linalg.eigh(a)
    w = _clip_spectrum(w, a.shape[0])
    return (v * np.sqrt(w)) @ v.conj().T


def _coerce_state(x) -> DensityMatrix:
    return x if isinstance(x, DensityMatrix) else DensityMatrix(np.asarray(x))


def trace_product(a, b) -> float:
    """Tr(AB) for Hermitian A, B (real by symmetry)."""
    am, bm = _as_array(a), _as_array(b)
    return float(np.vdot(am, bm).real)  # Tr(A†B) = Tr(AB) for Hermitian A


def fidelity(rho, sigma) -> float:
    """Fidelity [Tr sqrt(sqrt(rho) sigma sqrt(rho))]^2, clamped to [0, 1].

    Evaluated as the squared trace norm of sqrt(sigma) @ sqrt(rho): the
    eigenvalues of sqrt(rho) sigma sqrt(rho) are the squared singular values
    of that product, and singular values perturb linearly under roundoff
    where the square root of a near-zero eigenvalue does not. In particular
    fidelity(rho, rho) reduces to (Tr rho)^2 up to machine precision even
    for rank-deficient states.

    For qubits 1 - Tr rho^2 = 2 det rho turns the fidelity into the
    super-fidelity; that case shares super_fidelity's arithmetic so the two
    functions agree to the ulp instead of to root-eigenvalue noise.
    """
    r = _coerce_state(rho)
    s = _coerce_state(sigma)
    if r.dim != s.dim:
        raise ValueError(f"dimension mismatch: {r.dim} vs {s.dim}")
    if r.dim == 2:
        return super_fidelity(r, s)
    f = float(np.linalg.svd(_psd_sqrt(s.mat) @ _psd_sqrt(r.mat), compute_uv=False).sum() ** 2)
    return min(max(f, 0.0), 1.0)


def purity(rho) -> float:
    """Tr(rho^2), clamped into [1/d, 1]."""
    r = _coerce_state(rho)
    p = float(np.vdot(r.mat, r.mat).real)
    return min(max(p, 1.0 / r.dim), 1.0)


def _purity_deficit(mat: np.ndarray) -> float:
    # deficits below eigendecomposition noise count as zero, so states that
    # are pure up to rounding contribute no cross term at all
    deficit = 1.0 - float(np.vdot(mat, mat).real)
    return deficit if deficit > 16.0 * _EPS else 0.0


def super_fidelity(rho, sigma) -> float:
    """Tr(rho sigma) + sqrt(1 - Tr rho^2) sqrt(1 - Tr sigma^2), clamped to [0, 1].

    An upper bound on the fidelity; coincides with it for qubits.
    """
    r = _coerce_state(rho)
    s = _coerce_state(sigma)
    if r.dim != s.dim:
        raise ValueError(f"dimension mismatch: {r.dim} vs {s.dim}")
    overlap = float(np.vdot(r.mat, s.mat).real)
    val = overlap + math.sqrt(_purity_deficit(r.mat)) * math.sqrt(_purity_deficit(s.mat))
    return min(max(val, 0.0), 1.0)


def schatten_norm(x, p) -> float:
    """Schatten p-norm (sum |eig|^p)^(1/p); p = inf gives the operator norm."""
    a = _as_array(x)
    w = np.linalg.eigvalsh(a)
    if p == math.inf or p == np.inf:
        return float(np.max(np.abs(w)))
    p = float(p)
    if p < 1.0:
        raise ValueError(f"Schatten norm requires p >= 1, got {p}")
    if p == 1.0:
        return float(np.sum(np.abs(w)))
    return float(np.sum(np.abs(w) ** p) ** (1.0 / p))
