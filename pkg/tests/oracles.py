"""Independent reference implementations the tests compare the library against.

Everything in this module is derived from scratch (closed forms, rejection
sampling, generic convex ascent) rather than by calling back into fidbench,
so each comparison crosses two unrelated code paths.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import stats


# ---------------------------------------------------------------------------
# fidelity references


def qubit_fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Bloch closed form F = Tr(rho sigma) + 2 sqrt(det rho det sigma)."""
    tr = np.trace(rho @ sigma).real
    dr = max(np.linalg.det(rho).real, 0.0)
    ds = max(np.linalg.det(sigma).real, 0.0)
    return float(min(max(tr + 2.0 * math.sqrt(dr) * math.sqrt(ds), 0.0), 1.0))


def fid_pairs_d2(rhos: np.ndarray, sigmas: np.ndarray) -> np.ndarray:
    """All-pairs qubit fidelity via the Bloch closed form, (m,2,2)x(n,2,2)->(m,n)."""
    tr = np.einsum("mab,nba->mn", rhos, sigmas).real
    dr = (rhos[:, 0, 0] * rhos[:, 1, 1] - rhos[:, 0, 1] * rhos[:, 1, 0]).real
    ds = (sigmas[:, 0, 0] * sigmas[:, 1, 1] - sigmas[:, 0, 1] * sigmas[:, 1, 0]).real
    f = tr + 2.0 * np.sqrt(np.maximum(dr, 0.0))[:, None] * np.sqrt(np.maximum(ds, 0.0))[None, :]
    return np.clip(f, 0.0, 1.0)


def _det3(m: np.ndarray) -> np.ndarray:
    return (
        m[..., 0, 0] * (m[..., 1, 1] * m[..., 2, 2] - m[..., 1, 2] * m[..., 2, 1])
        - m[..., 0, 1] * (m[..., 1, 0] * m[..., 2, 2] - m[..., 1, 2] * m[..., 2, 0])
        + m[..., 0, 2] * (m[..., 1, 0] * m[..., 2, 1] - m[..., 1, 1] * m[..., 2, 0])
    )


def _sqrt_eig_sum_d3(t1: np.ndarray, t2: np.ndarray, d3: np.ndarray) -> np.ndarray:
    """sum_i sqrt(lambda_i) for 3x3 products rho@sigma from trace powers.

    The eigenvalues of rho@sigma are those of sqrt(rho)@sigma@sqrt(rho), so
    they are real and non-negative; the characteristic cubic therefore has
    three real roots. The largest comes from the trigonometric formula plus
    two Newton polish steps, the other two from the deflated quadratic.
    """
    c2 = t1
    c1 = 0.5 * (t1 * t1 - t2)
    c0 = d3
    p = c1 - c2 * c2 / 3.0
    q = -2.0 * c2**3 / 27.0 + c2 * c1 / 3.0 - c0
    m = 2.0 * np.sqrt(np.maximum(-p / 3.0, 0.0))
    denom = p * m
    with np.errstate(divide="ignore", invalid="ignore"):
        arg = np.where(denom != 0.0, 3.0 * q / denom, 0.0)
    lam1 = m * np.cos(np.arccos(np.clip(arg, -1.0, 1.0)) / 3.0) + c2 / 3.0
    for _ in range(2):
        f = ((lam1 - c2) * lam1 + c1) * lam1 - c0
        fp = (3.0 * lam1 - 2.0 * c2) * lam1 + c1
        lam1 = lam1 - np.where(np.abs(fp) > 1e-300, f / np.where(fp == 0.0, 1.0, fp), 0.0)
    lam1 = np.maximum(lam1, 0.0)
    # remaining roots solve x^2 - s x + r = 0 with s, r from exact relations
    s = c2 - lam1
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(lam1 > 0.0, c0 / np.where(lam1 == 0.0, 1.0, lam1), 0.0)
    r = np.maximum(r, 0.0)
    disc = np.maximum(s * s - 4.0 * r, 0.0)
    lam2 = np.maximum(0.5 * (s + np.sqrt(disc)), 0.0)
    # zero noise-level roots before dividing, else r/lam2 is a ratio of garbage
    floor = 64.0 * np.finfo(float).eps * np.maximum(lam1, 1e-30)
    lam2 = np.where(lam2 < floor, 0.0, lam2)
    with np.errstate(divide="ignore", invalid="ignore"):
        lam3 = np.where(lam2 > 0.0, r / np.where(lam2 == 0.0, 1.0, lam2), 0.0)
    lam3 = np.clip(lam3, 0.0, lam2)
    lam3 = np.where(lam3 < floor, 0.0, lam3)
    return np.sqrt(lam1) + np.sqrt(lam2) + np.sqrt(lam3)


def fid_pairs_d3(rhos: np.ndarray, sigmas: np.ndarray, chunk: int = 2048) -> np.ndarray:
    """All-pairs qutrit fidelity from the characteristic cubic of rho@sigma."""
    out = np.empty((rhos.shape[0], sigmas.shape[0]))
    for lo in range(0, sigmas.shape[0], chunk):
        prod = np.einsum("mab,nbc->mnac", rhos, sigmas[lo : lo + chunk])
        t1 = np.einsum("mnaa->mn", prod).real
        t2 = np.einsum("mnab,mnba->mn", prod, prod).real
        d3 = _det3(prod).real
        ssum = _sqrt_eig_sum_d3(t1, t2, d3)
        out[:, lo : lo + prod.shape[1]] = np.clip(ssum * ssum, 0.0, 1.0)
    return out


def avg_fidelity_to_candidates(
    particles: np.ndarray, weights: np.ndarray, candidates: np.ndarray
) -> np.ndarray:
    """Average fidelity sum_j w_j F(rho_j, sigma_c) for every candidate."""
    d = particles.shape[-1]
    if d == 2:
        fmat = fid_pairs_d2(particles, candidates)
    elif d == 3:
        fmat = fid_pairs_d3(particles, candidates)
    else:
        raise ValueError(f"no batched fidelity reference for dimension {d}")
    return weights @ fmat


# ---------------------------------------------------------------------------
# generic maximization of r.s + p sqrt(1 - |s|^2) over the simplex


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    idx = np.arange(1, v.size + 1)
    cond = u - (css - 1.0) / idx > 0.0
    k = idx[cond][-1]
    theta = (css[cond][-1] - 1.0) / k
    return np.maximum(v - theta, 0.0)


def ascent_value(r: np.ndarray, p: float, iters: int = 4000, restarts: int = 3, seed: int = 7) -> float:
    """Projected gradient ascent with adaptive step and multiple starts.

    The objective is concave on the feasible set, so the ascent converges to
    the global maximum; restarts only guard against slow starts.
    """
    r = np.asarray(r, dtype=float)
    d = r.size

    def f(s: np.ndarray) -> float:
        return float(r @ s + p * math.sqrt(max(0.0, 1.0 - s @ s)))

    gen = np.random.default_rng(seed)
    starts = [np.full(d, 1.0 / d)]
    vertex = np.zeros(d)
    vertex[int(np.argmax(r))] = 1.0
    starts.append(vertex)
    for _ in range(restarts):
        starts.append(project_simplex(gen.random(d)))

    best_val = -np.inf
    for s0 in starts:
        s = s0.copy()
        best = f(s)
        eta = 0.5
        for _ in range(iters):
            root = math.sqrt(max(1e-18, 1.0 - float(s @ s)))
            grad = r - p * s / root
            cand = project_simplex(s + eta * grad)
            fc = f(cand)
            if fc > best:
                s, best = cand, fc
                eta = min(eta * 1.25, 1e3)
            else:
                eta *= 0.5
                if eta < 1e-14:
                    break
        best_val = max(best_val, best)
    return best_val


# ---------------------------------------------------------------------------
# sampling references


def haar_vectors(d: int, gen: np.random.Generator, n: int) -> np.ndarray:
    """n Haar-random unit vectors, rows of shape (n, d)."""
    z = gen.standard_normal((n, d)) + 1j * gen.standard_normal((n, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def rejection_covariant_overlaps(rho: np.ndarray, gen: np.random.Generator, n: int) -> np.ndarray:
    """n overlaps <psi|rho|psi> with psi drawn from the covariant outcome law.

    Proposal: Haar. Accept with probability <psi|rho|psi> / lambda_max, which
    realizes the outcome density proportional to <psi|rho|psi>.
    """
    lam_max = float(np.linalg.eigvalsh(rho)[-1])
    out = []
    need = n
    while need > 0:
        batch = max(2048, int(3.0 * need * lam_max * rho.shape[0]))
        psi = haar_vectors(rho.shape[0], gen, batch)
        t = np.einsum("ni,ij,nj->n", psi.conj(), rho, psi).real
        keep = t[gen.random(batch) * lam_max < t]
        out.append(keep[:need])
        need -= keep[:need].size
    return np.concatenate(out)


def hs_qubit_eigenvalue_edges(n_bins: int) -> np.ndarray:
    """Equal-mass bin edges for the qubit eigenvalue law with density 3(2x-1)^2."""
    v = np.linspace(0.0, 1.0, n_bins + 1)
    return (1.0 + np.cbrt(2.0 * v - 1.0)) / 2.0


def arcsine_eigenvalue_edges(n_bins: int) -> np.ndarray:
    """Equal-mass bin edges for the density 1/(pi sqrt(x(1-x)))."""
    v = np.linspace(0.0, 1.0, n_bins + 1)
    return np.sin(v * np.pi / 2.0) ** 2


def bures_qubit_eigenvalue_cdf(x: np.ndarray) -> np.ndarray:
    """CDF of the qubit eigenvalue law with density (2/pi)(2x-1)^2/sqrt(x(1-x)).

    Substituting x = sin^2 theta gives the antiderivative theta + sin(4 theta)/4.
    """
    theta = np.arcsin(np.sqrt(np.clip(x, 0.0, 1.0)))
    return (2.0 / np.pi) * (theta + np.sin(4.0 * theta) / 4.0)


def bures_qubit_eigenvalue_edges(n_bins: int) -> np.ndarray:
    """Equal-mass bin edges for the Bures qubit eigenvalue law, by bisection."""
    targets = np.linspace(0.0, 1.0, n_bins + 1)[1:-1]
    edges = [0.0]
    for t in targets:
        lo, hi = 0.0, 1.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if bures_qubit_eigenvalue_cdf(np.asarray(mid)) < t:
                lo = mid
            else:
                hi = mid
        edges.append(0.5 * (lo + hi))
    edges.append(1.0)
    return np.asarray(edges)


# ---------------------------------------------------------------------------
# chi-square helpers


def chi2_equal_mass_pvalue(samples: np.ndarray, edges: np.ndarray) -> float:
    """Goodness-of-fit p-value for equal-mass bins given by edges."""
    counts, _ = np.histogram(samples, bins=edges)
    expected = samples.size / (edges.size - 1)
    stat = float(np.sum((counts - expected) ** 2 / expected))
    return float(stats.chi2.sf(stat, counts.size - 1))


def two_sample_chi2_pvalue(a: np.ndarray, b: np.ndarray, n_bins: int = 30) -> float:
    """Homogeneity test on pooled-quantile bins."""
    pooled = np.concatenate([a, b])
    edges = np.quantile(pooled, np.linspace(0.0, 1.0, n_bins + 1))
    edges[0] -= 1e-12
    edges[-1] += 1e-12
    ca, _ = np.histogram(a, bins=edges)
    cb, _ = np.histogram(b, bins=edges)
    tot = ca + cb
    keep = tot > 0
    ca, cb, tot = ca[keep], cb[keep], tot[keep]
    ea = tot * (a.size / pooled.size)
    eb = tot * (b.size / pooled.size)
    stat = float(np.sum((ca - ea) ** 2 / ea) + np.sum((cb - eb) ** 2 / eb))
    return float(stats.chi2.sf(stat, ca.size - 1))
