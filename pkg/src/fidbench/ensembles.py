"""Random-state priors, Haar unitaries, and the weighted particle ensemble.

Samplers accept an optional ``size`` so callers can draw a whole stacked
(n, d, d) batch in one shot; the single-draw path returns a validated
DensityMatrix. Randomness flows through RngStream, a counter-based Philox
generator keyed by (seed, stream id), so distinct trials can run in parallel
and still replay bit-for-bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .qmat import EIG_FLOOR, TRACE_TOL, DensityMatrix, HermitianMatrix, symmetrize

__all__ = [
    "RngStream",
    "WeightedEnsemble",
    "EnsembleMoments",
    "sample_haar_pure",
    "sample_hilbert_schmidt",
    "sample_bures",
    "sample_arcsine",
    "sample_haar_unitary",
    "moments",
    "prior_sampler",
    "ensemble_to_jsonl",
    "ensemble_from_jsonl",
    "PRIOR_NAMES",
]

PURE_PURITY_THRESHOLD = 1.0 - 1e-10


class RngStream:
    """Deterministic random stream keyed by (seed, stream).

    Identical (seed, stream) pairs produce identical sample sequences;
    distinct stream ids are statistically independent.
    """

    def __init__(self, seed: int, stream: int = 0) -> None:
        seed = int(seed)
        stream = int(stream)
        if seed < 0 or stream < 0:
            raise ValueError("seed and stream must be non-negative")
        self.seed = seed
        self.stream = stream
        ss = np.random.SeedSequence(entropy=seed, spawn_key=(stream,))
        self.gen = np.random.Generator(np.random.Philox(ss))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream={self.stream})"


def _gen(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.gen
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


def _check_dim(d: int) -> int:
    d = int(d)
    if d < 2:
        raise ValueError(f"dimension must be at least 2, got {d}")
    return d


def _complex_gaussian(gen: np.random.Generator, shape) -> np.ndarray:
    return (gen.standard_normal(shape) + 1j * gen.standard_normal(shape)) / np.sqrt(2.0)


def sample_haar_vector(d: int, rng, size: int | None = None) -> np.ndarray:
    """Haar-random unit vector(s) in C^d: normalized complex Gaussians."""
    d = _check_dim(d)
    n = 1 if size is None else int(size)
    g = _complex_gaussian(_gen(rng), (n, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g[0] if size is None else g


def sample_haar_pure(d: int, rng, size: int | None = None):
    """Haar-random rank-1 projector(s) |psi><psi|."""
    psi = sample_haar_vector(d, rng, size=1 if size is None else size)
    stack = np.einsum("ni,nj->nij", psi, psi.conj())
    if size is None:
        return DensityMatrix(stack[0])
    return stack


def sample_hilbert_schmidt(d: int, rng, size: int | None = None):
    """Hilbert-Schmidt-distributed state(s): GG†/Tr(GG†), G complex Ginibre."""
    d = _check_dim(d)
    n = 1 if size is None else int(size)
    g = _complex_gaussian(_gen(rng), (n, d, d))
    m = g @ np.conj(np.swapaxes(g, -1, -2))
    m /= np.trace(m, axis1=-2, axis2=-1)[:, None, None].real
    if size is None:
        return DensityMatrix(m[0])
    return m


def sample_haar_unitary(d: int, rng, size: int | None = None) -> np.ndarray:
    """Haar-random unitary matrices via QR of a Ginibre matrix.

    The R diagonal is rephased to be positive, which removes the gauge
    freedom that makes plain QR non-Haar.
    """
    d = _check_dim(d)
    n = 1 if size is None else int(size)
    g = _complex_gaussian(_gen(rng), (n, d, d))
    q, r = np.linalg.qr(g)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    q = q * (diag / np.abs(diag))[:, None, :]
    return q[0] if size is None else q


def sample_bures(d: int, rng, size: int | None = None):
    """Bures-distributed state(s): (1+U)GG†(1+U†)/Tr, U Haar, G Ginibre."""
    d = _check_dim(d)
    n = 1 if size is None else int(size)
    gen = _gen(rng)
    u = sample_haar_unitary(d, gen, size=n)
    g = _complex_gaussian(gen, (n, d, d))
    a = (np.eye(d) + u) @ g
    m = a @ np.conj(np.swapaxes(a, -1, -2))
    m /= np.trace(m, axis1=-2, axis2=-1)[:, None, None].real
    if size is None:
        return DensityMatrix(m[0])
    return m


def sample_arcsine(d: int, rng, size: int | None = None):
    """Arcsine-distributed state(s): Haar eigenbasis, spectrum from a real sphere point.

    The spectrum is the squared coordinates of a uniform point on the real
    unit sphere in R^d, so for d = 2 a single eigenvalue follows the arcsine
    density 1/(pi sqrt(x(1-x))). Equivalent at d = 2 to (1+U)(1+U')/4 with U
    a Haar unitary conditioned on zero trace; the unconditioned form fails
    the arcsine marginal, see the tests.
    """
    d = _check_dim(d)
    n = 1 if size is None else int(size)
    gen = _gen(rng)
    u = sample_haar_unitary(d, gen, size=n)
    x = gen.standard_normal((n, d))
    spec = x * x / np.sum(x * x, axis=1, keepdims=True)
    m = (u * spec[:, None, :]) @ np.conj(np.swapaxes(u, -1, -2))
    if size is None:
        return DensityMatrix(m[0])
    return m


PRIOR_NAMES = ("haar_pure", "hilbert_schmidt", "bures", "arcsine")

_PRIOR_FUNCS = {
    "haar_pure": sample_haar_pure,
    "hilbert_schmidt": sample_hilbert_schmidt,
    "bures": sample_bures,
    "arcsine": sample_arcsine,
}


def prior_sampler(name: str):
    """Look up a prior sampler by name; raises ValueError with the valid names."""
    try:
        return _PRIOR_FUNCS[name]
    except KeyError:
        raise ValueError(f"unknown prior {name!r}; expected one of {PRIOR_NAMES}") from None


def _validate_stack(stack: np.ndarray) -> None:
    """Batched DensityMatrix checks on an (n, d, d) stack."""
    tr = np.trace(stack, axis1=-2, axis2=-1)
    if np.max(np.abs(tr - 1.0)) > TRACE_TOL:
        bad = int(np.argmax(np.abs(tr - 1.0)))
        raise ValueError(f"particle {bad} has trace {tr[bad]!r}, expected 1")
    wmin = np.linalg.eigvalsh(stack)[:, 0]
    if np.min(wmin) < -EIG_FLOOR:
        bad = int(np.argmin(wmin))
        raise ValueError(
            f"particle {bad} has eigenvalue {wmin[bad]!r} below the -{EIG_FLOOR} floor"
        )


class WeightedEnsemble:
    """Weighted mixture of density matrices, stored as one (n, d, d) stack.

    Weights are non-negative and sum to 1 within 1e-10. Construction
    symmetrizes the particles; pass ``validate=False`` to skip the batched
    trace/PSD checks when the particles are known-good (convex combinations
    and copies of already-validated states).
    """

    __slots__ = ("particles", "weights")

    def __init__(self, particles, weights=None, *, validate: bool = True) -> None:
        if isinstance(particles, np.ndarray) and particles.ndim == 3:
            stack = np.asarray(particles, dtype=np.complex128).copy()
        else:
            mats = [p.mat if isinstance(p, HermitianMatrix) else np.asarray(p) for p in particles]
            if not mats:
                raise ValueError("ensemble needs at least one particle")
            stack = np.stack(mats).astype(np.complex128)
        if stack.ndim != 3 or stack.shape[1] != stack.shape[2]:
            raise ValueError(f"expected an (n, d, d) stack, got shape {stack.shape}")
        if stack.shape[0] == 0:
            raise ValueError("ensemble needs at least one particle")
        stack = symmetrize(stack)

        n = stack.shape[0]
        if weights is None:
            w = np.full(n, 1.0 / n)
        else:
            w = np.asarray(weights, dtype=np.float64).copy()
        if w.shape != (n,):
            raise ValueError(f"expected {n} weights, got shape {w.shape}")
        if np.any(w < 0.0):
            raise ValueError("weights must be non-negative")
        if abs(w.sum() - 1.0) > 1e-10:
            raise ValueError(f"weights sum to {w.sum()!r}, expected 1 within 1e-10")

        if validate:
            _validate_stack(stack)

        stack.setflags(write=False)
        w.setflags(write=False)
        self.particles = stack
        self.weights = w

    def __len__(self) -> int:
        return self.particles.shape[0]

    @property
    def dim(self) -> int:
        return self.particles.shape[1]

    def particle(self, i: int) -> DensityMatrix:
        return DensityMatrix(self.particles[i])

    def purities(self) -> np.ndarray:
        """Tr(rho_j^2) for every particle, one pass over the stack."""
        return np.einsum("nij,nij->n", self.particles, self.particles.conj()).real


@dataclass(frozen=True)
class EnsembleMoments:
    """First and second moments of a weighted ensemble.

    mean is the ensemble average of the particles, mean_square the average
    of their squares, p_rho the average root purity deficit (exactly 0 when
    every particle is pure to within 1e-10), and mean_purity the average
    purity.
    """

    mean: HermitianMatrix
    mean_square: HermitianMatrix
    p_rho: float
    mean_purity: float


def moments(e: WeightedEnsemble) -> EnsembleMoments:
    """Weighted mean, mean square, average root purity deficit, mean purity."""
    w = e.weights
    stack = e.particles
    mean = np.einsum("n,nij->ij", w, stack)
    mean_square = np.einsum("n,nij,njk->ik", w, stack, stack, optimize=True)
    pur = e.purities()
    # Pure particles can exceed purity 1 by rounding; treat >= 1 - 1e-10 as pure
    # so pure-support detection is exact.
    deficit = 1.0 - np.clip(pur, 0.0, 1.0)
    deficit[pur >= PURE_PURITY_THRESHOLD] = 0.0
    p_rho = float(w @ np.sqrt(deficit))
    return EnsembleMoments(
        mean=HermitianMatrix(mean),
        mean_square=HermitianMatrix(mean_square),
        p_rho=p_rho,
        mean_purity=float(w @ pur),
    )


def ensemble_to_jsonl(e: WeightedEnsemble, path) -> None:
    """Write an ensemble as JSON Lines: {"w": ..., "re": [[...]], "im": [[...]]}."""
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(len(e)):
            p = e.particles[i]
            row = {"w": float(e.weights[i]), "re": p.real.tolist(), "im": p.imag.tolist()}
            fh.write(json.dumps(row) + "\n")


def ensemble_from_jsonl(path) -> WeightedEnsemble:
    """Read an ensemble written by ensemble_to_jsonl."""
    stack = []
    weights = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            stack.append(np.asarray(row["re"], dtype=float) + 1j * np.asarray(row["im"], dtype=float))
            weights.append(float(row["w"]))
    if not stack:
        raise ValueError(f"no particles found in {path}")
    return WeightedEnsemble(np.stack(stack), np.asarray(weights))
