"""Synthetic instances whose covariance shares the L_K eigenbasis.

With L_K psi_j = lambda_j psi_j and covariance eigenvalues nu_j, the operator
L_K^{1/2} L_C L_K^{1/2} has eigenvalues mu_j = lambda_j nu_j.  Choosing
nu_j = j^{-1/p} / lambda_j fixes the decay exponent p exactly, and the slope
beta0 = sum_j sqrt(lambda_j) mu_j^theta g0_j psi_j fixes the source exponent.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, DomainError, IllConditionedError, ShapeError
from .estimator import Dataset
from .grid import Grid
from .kernelcore import SobolevKernelSpec, sobolev_kernel_eval
from .operators import DiscretizedOperator, SpectralDecomposition, operator_from_spectrum, rho_estimate


@dataclass(frozen=True)
class NoiseSpec:
    sigma: float = 0.0
    law: str = "gaussian"

    def __post_init__(self):
        if not np.isfinite(self.sigma) or self.sigma < 0:
            raise DomainError(f"noise std must be >= 0, got {self.sigma}")
        if self.law != "gaussian":
            raise DomainError(f"unsupported noise law {self.law!r}")


@dataclass(frozen=True)
class GroundTruth:
    p: float
    theta: float
    J: int
    mu_target: np.ndarray
    nu: np.ndarray
    g0_coeffs: np.ndarray
    f0_coeffs: np.ndarray
    sigma: float
    lk: SpectralDecomposition = field(repr=False)
    psi_end: np.ndarray = field(repr=False, default=None)

    @property
    def grid(self) -> Grid:
        return self.lk.grid

    @property
    def lam(self) -> np.ndarray:
        return self.lk.eigenvalues[: self.J]

    @property
    def beta0_coeffs(self) -> np.ndarray:
        """Coefficients of beta0 in the psi basis."""
        return np.sqrt(self.lam) * self.f0_coeffs

    @property
    def beta0(self) -> np.ndarray:
        """beta0 at the interior nodes."""
        return self.lk.synthesize(self.beta0_coeffs)

    @property
    def f0_norm_sq(self) -> float:
        return float(self.f0_coeffs @ self.f0_coeffs)

    @property
    def kappa_sq(self) -> float:
        """E||X||_W^2 = sum_j nu_j / lambda_j."""
        return float(np.sum(self.nu / self.lam))

    @property
    def trace_T(self) -> float:
        return float(np.sum(self.mu_target))

    @property
    def rho(self) -> float:
        return rho_estimate(self.mu_target)

    @property
    def lc(self) -> DiscretizedOperator:
        return operator_from_spectrum(self.grid, self.nu, self.lk.eigenfunctions[:, : self.J], "L_C")

    @property
    def basis_full(self) -> np.ndarray:
        """(m+1) x J matrix of psi_j at every node including r_{m+1} = 1."""
        return np.vstack([self.lk.eigenfunctions[:, : self.J], self.psi_end[None, :]])

    def source_certificate(self) -> dict:
        return {"theta": self.theta, "g0": [float(v) for v in self.g0_coeffs],
                "g0_norm": float(np.linalg.norm(self.g0_coeffs))}

    def to_dict(self) -> dict:
        return {
            "p": self.p, "theta": self.theta, "J": self.J, "sigma": self.sigma,
            "mu": [float(v) for v in self.mu_target],
            "nu": [float(v) for v in self.nu],
            "g0": [float(v) for v in self.g0_coeffs],
            "kappa_sq": self.kappa_sq,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def nystrom_endpoint(lk: SpectralDecomposition, kernel: SobolevKernelSpec, J: int, t: float = 1.0):
    """psi_j(t) = (1/lambda_j) sum_k w_k K(t, r_k) psi_j(r_k)."""
    k_t = sobolev_kernel_eval(kernel, t, lk.grid.interior)
    return (lk.grid.weights * k_t) @ lk.eigenfunctions[:, :J] / lk.eigenvalues[:J]


def build_ground_truth(lk: SpectralDecomposition, p: float, theta: float, J: int | None = None,
                       seed: int = 0, *, kernel: SobolevKernelSpec | None = None,
                       sigma: float = 0.0, inv_cutoff: float = 1e-12,
                       g0_decay: float = 0.0) -> GroundTruth:
    """Aligned instance with mu_j = j^{-1/p} for j <= J.

    g0 has seeded Gaussian coefficients scaled by j^{-g0_decay}, then unit
    normalized.  Without ``kernel`` the value of each psi_j at the right
    endpoint is copied from the last interior node.
    """
    if not (0 < p <= 1):
        raise DomainError(f"p must lie in (0, 1], got {p}")
    if theta < 0:
        raise DomainError(f"theta must be >= 0, got {theta}")
    J = int(J) if J is not None else min(64, lk.rank // 2)
    if J < 1 or J > lk.rank:
        raise CapacityError(f"J={J} exceeds the retained rank {lk.rank}")
    lam = lk.eigenvalues[:J]
    if lam[-1] < inv_cutoff * lk.top:
        raise IllConditionedError(
            f"lambda_J/lambda_1 = {lam[-1] / lk.top:.3e} is below the inversion floor {inv_cutoff:g}",
            condition_number=float(lk.top / lam[-1]) if lam[-1] > 0 else float("inf"),
        )
    j = np.arange(1, J + 1, dtype=float)
    mu = j ** (-1.0 / p)
    nu = mu / lam
    g = np.random.default_rng(seed).standard_normal(J) * j ** (-g0_decay)
    g0 = g / np.linalg.norm(g)
    f0 = mu**theta * g0
    if kernel is not None:
        psi_end = nystrom_endpoint(lk, kernel, J)
    else:
        psi_end = lk.eigenfunctions[-1, :J].copy()
    return GroundTruth(float(p), float(theta), J, mu, nu, g0, f0, float(sigma), lk, psi_end)


def _scores(gt: GroundTruth, n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal((n, gt.J)) * np.sqrt(gt.nu)


def sample_X(gt: GroundTruth, n: int, seed: int = 0) -> np.ndarray:
    """n x (m+1) Gaussian covariates sum_j sqrt(nu_j) xi_j psi_j at all nodes."""
    if n < 1:
        raise DomainError("n must be >= 1")
    return _scores(gt, n, np.random.default_rng(seed)) @ gt.basis_full.T


def gen_dataset(gt: GroundTruth, grid: Grid, n: int, noise: NoiseSpec | None = None,
                seed: int = 0) -> Dataset:
    """Covariates plus responses <beta0, X> evaluated spectrally, plus noise."""
    if grid != gt.grid:
        raise ShapeError("dataset grid must match the ground-truth grid")
    if n < 1:
        raise DomainError("n must be >= 1")
    noise = noise if noise is not None else NoiseSpec(gt.sigma)
    rng = np.random.default_rng(seed)
    Z = _scores(gt, n, rng)
    X = Z @ gt.basis_full.T
    y = Z @ gt.beta0_coeffs
    if noise.sigma > 0:
        y = y + noise.sigma * rng.standard_normal(n)
    return Dataset(grid, X, y)


def kurtosis_probe(gt: GroundTruth, n_mc: int = 100_000, seed: int = 0, n_directions: int = 5) -> dict:
    """E<X,f>^4 / (E<X,f>^2)^2 along random unit directions f in the psi span."""
    if n_mc < 10_000:
        raise DomainError("kurtosis_probe needs n_mc >= 1e4")
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((n_directions, gt.J))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    proj = _scores(gt, n_mc, rng) @ dirs.T
    m2 = np.mean(proj**2, axis=0)
    m4 = np.mean(proj**4, axis=0)
    ratios = m4 / m2**2
    return {"n_mc": n_mc, "ratios": [float(r) for r in ratios], "mean_ratio": float(ratios.mean())}
