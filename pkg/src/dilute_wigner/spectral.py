"""Spectral measurements on sampled realizations."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import rng
from .ensemble import EntryDistribution, EnsembleSpec, SparseSymmetricMatrix, sample_matrix
from .errors import ConvergenceError, InvalidParameterError, ResourceLimitError
from .trees import catalan

DENSE_LIMIT = 4096


@dataclass(frozen=True)
class SpectrumSummary:
    lambda_max: float
    n: int
    p: float | None = None
    seed: int | None = None
    iterations: int = 0
    eigenvalues: np.ndarray | None = None


@dataclass
class MomentReport:
    k: int
    monte_carlo_mean: float
    std_error: float
    trials: int
    exact_value: float | None = None
    bound_value: float | None = None


# -- semicircle law -----------------------------------------------------------

def semicircle_pdf(lam):
    lam = np.asarray(lam, dtype=np.float64)
    out = np.sqrt(np.clip(4.0 - lam * lam, 0.0, None)) / (2 * math.pi)
    return out if out.ndim else float(out)


def semicircle_cdf(lam):
    x = np.clip(np.asarray(lam, dtype=np.float64), -2.0, 2.0)
    out = 0.5 + x * np.sqrt(4.0 - x * x) / (4 * math.pi) + np.arcsin(x / 2) / math.pi
    out = np.clip(out, 0.0, 1.0)
    return out if out.ndim else float(out)


def semicircle_quantile(u, tol: float = 1e-14):
    """Inverse of :func:`semicircle_cdf` by bisection (the cdf has no closed inverse)."""
    u = np.asarray(u, dtype=np.float64)
    lo = np.full(u.shape, -2.0)
    hi = np.full(u.shape, 2.0)
    while np.max(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        below = semicircle_cdf(mid) < u
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def catalan_moment(k: int) -> int:
    """2k-th moment of the semicircle law."""
    return catalan(k)


def esd_ks_distance(eigenvalues) -> float:
    """Kolmogorov-Smirnov distance between the ESD and the semicircle cdf."""
    eig = np.asarray(eigenvalues, dtype=np.float64).ravel()
    if eig.size == 0:
        raise InvalidParameterError("empty eigenvalue list")
    return float(stats.kstest(eig, semicircle_cdf).statistic)


# -- eigenvalues ----------------------------------------------------------------

def dense_spectrum(m: SparseSymmetricMatrix, dense_limit: int = DENSE_LIMIT) -> np.ndarray:
    if m.n > dense_limit:
        raise ResourceLimitError(f"n={m.n} exceeds the dense limit {dense_limit}")
    return np.linalg.eigvalsh(m.to_dense())


def lanczos_extremes(
    m: SparseSymmetricMatrix,
    tol: float = 1e-10,
    max_iter: int = 5000,
    seed: int = 0,
    krylov_dim: int = 100,
) -> tuple[float, float, int]:
    """Smallest and largest eigenvalue by restarted Lanczos.

    Full reorthogonalization against the current Krylov basis; on restart the
    new start vector is the sum of the two extreme Ritz vectors so both ends
    stay in the next basis. Returns ``(lambda_min, lambda_max, matvecs)``.
    """
    if tol <= 0:
        raise InvalidParameterError("tol must be positive")
    n = m.n
    a = m.to_csr()
    g = rng.substream(seed, rng.LANCZOS, n)
    v = g.standard_normal(n)
    v /= np.linalg.norm(v)
    dim = min(n, krylov_dim)
    iters = 0
    last = (0.0, 0.0)
    while True:
        basis = np.zeros((dim + 1, n))
        basis[0] = v
        alphas: list[float] = []
        betas: list[float] = []
        for j in range(dim):
            w = a @ basis[j]
            iters += 1
            alpha = float(basis[j] @ w)
            w -= alpha * basis[j]
            if j:
                w -= betas[-1] * basis[j - 1]
            for _ in range(2):
                w -= basis[: j + 1].T @ (basis[: j + 1] @ w)
            beta = float(np.linalg.norm(w))
            alphas.append(alpha)
            t = np.diag(alphas) + np.diag(betas, 1) + np.diag(betas, -1)
            theta, s = np.linalg.eigh(t)
            scale = max(abs(theta[0]), abs(theta[-1]))
            last = (float(theta[0]), float(theta[-1]))
            if beta <= 1e-14 * max(scale, 1e-300) or j + 1 == n:
                # invariant subspace: Ritz values are exact eigenvalues
                return last[0], last[1], iters
            done = True
            for end, nxt in ((0, 1), (-1, -2)):
                res = beta * abs(s[-1, end])
                gap = abs(theta[end] - theta[nxt]) if len(theta) > 1 else 0.0
                err = min(res, res * res / gap) if gap > 0 else res
                if err > tol * scale:
                    done = False
            if done:
                return last[0], last[1], iters
            if iters >= max_iter:
                raise ConvergenceError("Lanczos did not converge", max(abs(last[0]), abs(last[1])), iters)
            betas.append(beta)
            basis[j + 1] = w / beta
        ritz = basis[:dim].T @ (s[:, 0] + s[:, -1])
        v = ritz / np.linalg.norm(ritz)


def spectral_norm(m: SparseSymmetricMatrix, tol: float = 1e-10, max_iter: int = 5000, seed: int = 0) -> float:
    lo, hi, _ = lanczos_extremes(m, tol, max_iter, seed)
    return max(abs(lo), abs(hi))


def summarize(m: SparseSymmetricMatrix, spec: EnsembleSpec | None = None, with_eigenvalues: bool = False,
              tol: float = 1e-10) -> SpectrumSummary:
    seed = spec.seed if spec else 0
    if with_eigenvalues:
        eig = dense_spectrum(m)
        lam = float(max(abs(eig[0]), abs(eig[-1]))) if eig.size else 0.0
        return SpectrumSummary(lam, m.n, spec.p if spec else None, seed if spec else None, 0, eig)
    lo, hi, iters = lanczos_extremes(m, tol=tol, seed=seed)
    return SpectrumSummary(max(abs(lo), abs(hi)), m.n, spec.p if spec else None, seed if spec else None, iters)


# -- moments -------------------------------------------------------------------

def moments_from_eigenvalues(eigenvalues, k_max: int) -> np.ndarray:
    if k_max < 1:
        raise InvalidParameterError("k_max must be >= 1")
    eig = np.asarray(eigenvalues, dtype=np.float64)
    sq = eig * eig
    out = np.empty(k_max)
    power = np.ones_like(sq)
    for k in range(k_max):
        power = power * sq
        out[k] = power.sum() / eig.size
    return out


def empirical_moments(m: SparseSymmetricMatrix, k_max: int) -> np.ndarray:
    """(1/n) Tr M^{2k} for k = 1..k_max, from the dense spectrum."""
    if k_max < 1:
        raise InvalidParameterError("k_max must be >= 1")
    return moments_from_eigenvalues(dense_spectrum(m), k_max)


def trace_moments_matvec(m: SparseSymmetricMatrix, k_max: int) -> np.ndarray:
    """Same quantity via Tr M^{2k} = sum_j |M^k e_j|^2; independent of any eigensolver."""
    a = m.to_csr()
    x = np.eye(m.n)
    out = np.empty(k_max)
    for k in range(k_max):
        x = a @ x
        out[k] = float(np.sum(x * x)) / m.n
    return out


def trial_seed(master_seed: int, n: int, p: float, trial: int) -> int:
    return rng.derive_seed(master_seed, rng.TRIAL, n, float(p), trial)


def monte_carlo_moments(
    n: int, p: float, dist: EntryDistribution, k_max: int, trials: int, master_seed: int = 0
) -> list[MomentReport]:
    """Mean and standard error of (1/n) Tr A^{2k} over seeded realizations."""
    if trials < 2:
        raise InvalidParameterError("need at least two trials for a standard error")
    vals = np.empty((trials, k_max))
    for t in range(trials):
        spec = EnsembleSpec(n, p, dist, trial_seed(master_seed, n, p, t))
        vals[t] = empirical_moments(sample_matrix(spec), k_max)
    mean = vals.mean(axis=0)
    se = vals.std(axis=0, ddof=1) / math.sqrt(trials)
    return [MomentReport(k + 1, float(mean[k]), float(se[k]), trials) for k in range(k_max)]
