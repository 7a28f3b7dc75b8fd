"""Packing family behind the minimax lower bound.

Sign codewords iota in {-1, +1}^J are kept pairwise far apart in Hamming
distance.  Each codeword gives a slope supported on modes J+1..2J with
source element g_i = iota / sqrt(J) (unit norm).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, ConstructionError, DomainError
from .operators import SpectralDecomposition, sobolev_norm


def hamming(a, b) -> int:
    return int(np.count_nonzero(np.asarray(a) != np.asarray(b)))


def varshamov_gilbert(J: int, seed: int = 0, max_attempts: int = 1_000_000,
                      min_distance: int | None = None, target: int | None = None,
                      batch: int = 4096) -> np.ndarray:
    """Greedy random codebook with pairwise Hamming distance >= min_distance.

    Defaults: min_distance = ceil(J/2), target = ceil(exp(J/8)).  Candidates
    are screened in seeded batches but accepted one at a time, so the result
    depends only on the seed.
    """
    if int(J) != J or J < 8:
        raise DomainError(f"J must be an integer >= 8, got {J}")
    J = int(J)
    dmin = math.ceil(J / 2) if min_distance is None else int(min_distance)
    target = math.ceil(math.exp(J / 8)) if target is None else int(target)
    rng = np.random.default_rng(seed)
    kept = np.empty((0, J), dtype=np.int8)
    tried = 0
    while tried < max_attempts and kept.shape[0] < target:
        k = min(batch, max_attempts - tried)
        cand = np.where(rng.random((k, J)) < 0.5, -1, 1).astype(np.int8)
        tried += k
        for c in cand:
            if kept.shape[0] == 0 or np.min(np.count_nonzero(kept != c, axis=1)) >= dmin:
                kept = np.vstack([kept, c])
                if kept.shape[0] >= target:
                    break
    if kept.shape[0] < target:
        raise ConstructionError(
            f"found {kept.shape[0]} of {target} codewords at distance {dmin} after {tried} draws"
        )
    return kept


@dataclass(frozen=True)
class PackingSet:
    J: int
    theta: float
    codewords: np.ndarray
    mu: np.ndarray            # mu_{J+1..2J}
    lam: np.ndarray           # lambda_{J+1..2J}
    lk: SpectralDecomposition | None = None

    @property
    def size(self) -> int:
        return int(self.codewords.shape[0])

    @property
    def g_coeffs(self) -> np.ndarray:
        return self.codewords / math.sqrt(self.J)

    @property
    def beta_coeffs(self) -> np.ndarray:
        """psi-basis coefficients of each beta_i on modes J+1..2J."""
        return np.sqrt(self.lam) * self.mu**self.theta * self.g_coeffs

    def beta_grid(self, i: int) -> np.ndarray:
        if self.lk is None:
            raise DomainError("no decomposition attached")
        return self.lk.eigenfunctions[:, self.J: 2 * self.J] @ self.beta_coeffs[i]

    def w_distance_sq(self, i1: int, i2: int) -> float:
        d = (self.mu**self.theta) * (self.g_coeffs[i1] - self.g_coeffs[i2])
        return float(d @ d)

    def w_distance_sq_grid(self, i1: int, i2: int, inv_cutoff: float = 1e-12) -> float:
        """Same distance through L_K^{-1/2} applied to grid functions."""
        return sobolev_norm(self.lk, self.beta_grid(i1) - self.beta_grid(i2), inv_cutoff) ** 2

    @property
    def separation_lower(self) -> float:
        L = self.size
        return min((self.w_distance_sq(a, b) for a in range(L) for b in range(a + 1, L)), default=math.inf)

    def to_dict(self) -> dict:
        return {
            "J": self.J, "theta": self.theta,
            "codewords": self.codewords.astype(int).tolist(),
            "mu": [float(v) for v in self.mu],
            "beta_coeffs": self.beta_coeffs.tolist(),
            "separation_lower": self.separation_lower,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def build_packing_slopes(lk: SpectralDecomposition | None, mu, theta: float, J: int,
                         codewords, lam=None) -> PackingSet:
    """Attach spectral slopes to codewords.

    ``mu`` holds at least 2J decay values mu_1..mu_2J.  L_K eigenvalues come
    from ``lk`` unless given directly as ``lam``.
    """
    mu = np.asarray(mu, float)
    codewords = np.asarray(codewords)
    if mu.size < 2 * J:
        raise CapacityError(f"need {2 * J} spectrum values, got {mu.size}")
    if codewords.ndim != 2 or codewords.shape[1] != J:
        raise DomainError("codewords must be an L x J array")
    if lam is None:
        if lk is None or lk.rank < 2 * J:
            raise CapacityError(f"need {2 * J} L_K modes")
        lam = lk.eigenvalues[J: 2 * J]
    else:
        lam = np.asarray(lam, float)[J: 2 * J]
    return PackingSet(int(J), float(theta), codewords, mu[J: 2 * J], lam, lk)


def kl_divergence_pair(ps: PackingSet, i1: int, i2: int, lc_spectrum=None, sigma: float = 1.0) -> float:
    """KL between the Gaussian response laws of two packing slopes.

    With ``lc_spectrum`` (nu_1..nu_2J) the value is (1/2 sigma^2) <d, L_C d>
    for d = beta_i1 - beta_i2; otherwise the aligned closed form with
    mu^{1+2 theta} is used.
    """
    if sigma <= 0:
        raise DomainError("sigma must be positive")
    L = ps.size
    if not (0 <= i1 < L and 0 <= i2 < L):
        raise IndexError(f"codeword index out of range 0..{L - 1}")
    dg = ps.g_coeffs[i1] - ps.g_coeffs[i2]
    if lc_spectrum is not None:
        nu = np.asarray(lc_spectrum, float)[ps.J: 2 * ps.J]
        d = np.sqrt(ps.lam) * ps.mu**ps.theta * dg
        return float(np.sum(nu * d**2) / (2 * sigma**2))
    return float(np.sum(ps.mu ** (1 + 2 * ps.theta) * dg**2) / (2 * sigma**2))


def max_kl(ps: PackingSet, sigma: float, lc_spectrum=None) -> float:
    L = ps.size
    return max((kl_divergence_pair(ps, a, b, lc_spectrum, sigma)
                for a in range(L) for b in range(a + 1, L)), default=0.0)


def fano_budget(N_list, p: float, theta: float, sigma: float, a: float = 16.0) -> list:
    """(N * KLmax + log 2) / log L with J = ceil(a N^{p/(1+p+2 theta)}).

    KLmax is the worst case over sign patterns (all J signs flipped) and
    log L is the guaranteed exponent J/8; no codebook is materialized.
    """
    rows = []
    for N in N_list:
        J = math.ceil(a * N ** (p / (1 + p + 2 * theta)))
        j = np.arange(J + 1, 2 * J + 1, dtype=float)
        kl = float(np.sum(4.0 / J * j ** (-(1 + 2 * theta) / p)) / (2 * sigma**2))
        log_L = J / 8
        rows.append({"N": int(N), "J": J, "kl_max": kl, "log_L": log_L,
                     "ratio": (N * kl + math.log(2)) / log_L})
    return rows
