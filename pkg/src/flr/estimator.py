"""Local spectral-regularization fit reduced to m x m kernel algebra.

With D = diag(w) and G = [K(r_k, r_l)], the empirical operator is similar
to ``A_sym = G^{1/2} (D X^T X D / n) G^{1/2}`` and the estimator has
coefficients ``c = G^{-1/2} Psi(A_sym) G^{1/2} b`` with ``b = D X^T y / n``.
The same ``c`` expands f_hat over K^{1/2}(., r_k) and beta_hat over K(., r_k).
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import DomainError, IllConditionedError, NumericError, ShapeError
from .filters import FilterSpec, filter_apply
from .grid import Grid
from .kernelcore import SobolevKernelSpec, kernel_matrix
from .operators import DiscretizedOperator, SpectralDecomposition

GRAM_FLOOR = 1e-12
PSD_TOL = 1e-10


@dataclass(frozen=True)
class Dataset:
    grid: Grid
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        y = np.asarray(self.y, dtype=float).ravel()
        if X.shape[1] != self.grid.m + 1:
            raise ShapeError(f"X needs {self.grid.m + 1} columns, got {X.shape[1]}")
        if X.shape[0] != y.size or y.size < 1:
            raise ShapeError("X rows and y length must agree and be >= 1")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise DomainError("dataset entries must be finite")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.y.size

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.grid, self.X[idx], self.y[idx])

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow([f"r_{k + 1}" for k in range(self.grid.m + 1)] + ["y"])
        for xi, yi in zip(self.X, self.y):
            wr.writerow([repr(float(v)) for v in xi] + [repr(float(yi))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, grid: Grid) -> "Dataset":
        rows = [r for r in csv.reader(io.StringIO(text)) if r]
        expected = [f"r_{k + 1}" for k in range(grid.m + 1)] + ["y"]
        if [c.strip() for c in rows[0]] != expected:
            raise ShapeError("dataset header does not match the grid")
        body = np.array([[float(v) for v in r] for r in rows[1:]])
        return cls(grid, body[:, :-1], body[:, -1])

    def save(self, data_path, grid_path) -> None:
        Path(data_path).write_text(self.to_csv())
        self.grid.save(grid_path)

    @classmethod
    def load(cls, data_path, grid_path) -> "Dataset":
        grid = Grid.load(grid_path)
        return cls.from_csv(Path(data_path).read_text(), grid)


@dataclass(frozen=True)
class GramFactor:
    """Symmetric square root and inverse square root of the kernel Gram G."""

    G: np.ndarray
    half: np.ndarray
    inv_half: np.ndarray
    condition_number: float


def factor_gram(G, floor: float = GRAM_FLOOR) -> GramFactor:
    G = 0.5 * (np.asarray(G, float) + np.asarray(G, float).T)
    ev, Q = np.linalg.eigh(G)
    top = ev[-1]
    if top <= 0:
        raise NumericError("kernel Gram matrix has no positive eigenvalue")
    if ev[0] < -PSD_TOL * top:
        raise NumericError(f"kernel Gram matrix is indefinite (min eigenvalue {ev[0]:.3e})")
    cond = float(top / ev[0]) if ev[0] > 0 else float("inf")
    if ev[0] < floor * top:
        raise IllConditionedError(
            f"kernel Gram is numerically singular (condition number {cond:.3e})",
            condition_number=cond,
        )
    r = np.sqrt(ev)
    half = (Q * r) @ Q.T
    inv_half = (Q / r) @ Q.T
    return GramFactor(G, 0.5 * (half + half.T), 0.5 * (inv_half + inv_half.T), cond)


@lru_cache(maxsize=16)
def gram_factor(kernel: SobolevKernelSpec, grid: Grid) -> GramFactor:
    return factor_gram(kernel_matrix(kernel, grid).values)


@dataclass(frozen=True)
class EmpiricalSystem:
    A_sym: np.ndarray
    G_half: np.ndarray
    D: np.ndarray
    b: np.ndarray
    gram: GramFactor = field(repr=False)


def assemble(dataset: Dataset, kernel: SobolevKernelSpec, gram: GramFactor | None = None) -> EmpiricalSystem:
    gram = gram or gram_factor(kernel, dataset.grid)
    w = dataset.grid.weights
    DX = dataset.X[:, :-1] * w
    n = dataset.n
    C = DX.T @ DX / n
    A = gram.half @ C @ gram.half
    A = 0.5 * (A + A.T)
    b = DX.T @ dataset.y / n
    return EmpiricalSystem(A, gram.half, np.diag(w), b, gram)


@dataclass(frozen=True)
class SlopeEstimate:
    grid: Grid
    coeffs: np.ndarray
    kernel_spec: SobolevKernelSpec
    lam: float = float("nan")
    filter: str = ""
    diagnostics: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, float).ravel()
        if c.size != self.grid.m:
            raise ShapeError(f"need {self.grid.m} coefficients, got {c.size}")
        if not np.all(np.isfinite(c)):
            raise NumericError("estimate coefficients are not finite")
        object.__setattr__(self, "coeffs", c)

    def beta_at_nodes(self, gram: GramFactor | None = None) -> np.ndarray:
        """beta_hat(r_k) = sum_l c_l K(r_k, r_l)."""
        G = gram.G if gram is not None else kernel_matrix(self.kernel_spec, self.grid).values
        return G @ self.coeffs

    def to_dict(self) -> dict:
        return {
            "alpha": self.kernel_spec.alpha,
            "nodes": [float(v) for v in self.grid.nodes],
            "coeffs": [float(v) for v in self.coeffs],
            "lambda": float(self.lam),
            "filter": self.filter,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "SlopeEstimate":
        return cls(Grid(np.array(d["nodes"], float)), np.array(d["coeffs"], float),
                   SobolevKernelSpec(int(d["alpha"])), float(d["lambda"]), str(d["filter"]))

    @classmethod
    def from_json(cls, text: str) -> "SlopeEstimate":
        return cls.from_dict(json.loads(text))


def fit_local(dataset: Dataset, kernel: SobolevKernelSpec, filt, lam: float,
              gram: GramFactor | None = None) -> SlopeEstimate:
    """Spectral-regularization estimate from one shard of data."""
    filt = filt if isinstance(filt, FilterSpec) else FilterSpec.parse(str(filt))
    if not (0.0 < lam < 1.0):
        raise DomainError(f"lambda must lie in (0, 1), got {lam}")
    t0 = time.perf_counter()
    system = assemble(dataset, kernel, gram)
    F, spectrum = filter_apply(filt, lam, system.A_sym, return_spectrum=True)
    z = F @ (system.G_half @ system.b)
    c = system.gram.inv_half @ z
    diag = {
        "gram_condition": system.gram.condition_number,
        "min_filtered_eigenvalue": float(spectrum.min()),
        "seconds": time.perf_counter() - t0,
    }
    return SlopeEstimate(dataset.grid, c, kernel, float(lam), str(filt), diag)


def predict(est: SlopeEstimate, x_new, gram: GramFactor | None = None):
    """Riemann value of <beta_hat, x>; x has m or m+1 node samples per row."""
    x = np.asarray(x_new, float)
    m = est.grid.m
    if x.shape[-1] not in (m, m + 1):
        raise ShapeError(f"covariate needs {m + 1} node values, got {x.shape[-1]}")
    x = x[..., :m]
    out = x @ (est.grid.weights * est.beta_at_nodes(gram))
    return float(out) if np.ndim(out) == 0 else out


def estimation_error_W(est: SlopeEstimate, f0_coeffs, lk: SpectralDecomposition) -> float:
    """Quadrature ||f_hat - f0||^2 with f_hat = sum_k c_k K^{1/2}(., r_k)."""
    if lk.grid != est.grid:
        raise ShapeError("estimate and decomposition use different grids")
    f0_coeffs = np.asarray(f0_coeffs, float)
    if f0_coeffs.size > lk.rank:
        raise ShapeError("truth has more modes than the decomposition retains")
    fhat = lk.sqrt_kernel_matrix @ est.coeffs
    diff = fhat - lk.synthesize(f0_coeffs)
    return float(lk.grid.weights @ diff**2)


def estimation_error_gram(est: SlopeEstimate, beta0_nodes, f0_norm_sq: float,
                          gram: GramFactor | None = None) -> float:
    """c^T G c - 2 c^T beta0(r) + ||f0||^2, the same norm without the sqrt kernel."""
    gram = gram or gram_factor(est.kernel_spec, est.grid)
    c = est.coeffs
    return float(c @ gram.G @ c - 2.0 * c @ np.asarray(beta0_nodes, float) + f0_norm_sq)


def prediction_risk(est: SlopeEstimate, truth_beta, lc: DiscretizedOperator,
                    gram: GramFactor | None = None) -> float:
    """Quadrature <d, L_C d> with d = beta_hat - beta0 on the interior nodes."""
    if lc.grid != est.grid:
        raise ShapeError("estimate and covariance operator use different grids")
    d = est.beta_at_nodes(gram) - np.asarray(truth_beta, float)
    return lc.quad_form(d)
