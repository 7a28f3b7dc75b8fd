"""Nystrom discretization of integral operators and their spectral calculus.

Operators act on grid functions sampled at the interior nodes r_1..r_m.
A kernel matrix ``M`` is symmetrized as ``A = W^{1/2} M W^{1/2}`` with
``W = diag(w)``, so Euclidean geometry on ``u = W^{1/2} f`` coincides with
the quadrature inner product on ``f``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import DomainError, IllPosedError, NumericError, ShapeError
from .grid import Grid
from .kernelcore import KernelMatrix

LABELS = ("L_K", "L_C", "T_alpha", "other")


@dataclass(frozen=True)
class DiscretizedOperator:
    grid: Grid
    sym_matrix: np.ndarray
    label: str = "other"

    def __post_init__(self):
        A = np.asarray(self.sym_matrix, dtype=float)
        m = self.grid.m
        if A.shape != (m, m):
            raise ShapeError(f"operator matrix must be {m}x{m}, got {A.shape}")
        scale = max(np.abs(A).max(), 1.0)
        if np.abs(A - A.T).max() > 1e-12 * scale:
            raise ShapeError("operator matrix is not symmetric")
        if self.label not in LABELS:
            raise DomainError(f"unknown operator label {self.label!r}")
        object.__setattr__(self, "sym_matrix", A)

    def apply(self, f):
        """Apply the operator to a grid function f (values at r_1..r_m)."""
        sw = np.sqrt(self.grid.weights)
        return (self.sym_matrix @ (sw * np.asarray(f, float))) / sw

    def quad_form(self, f) -> float:
        """Quadrature value of <f, Op f>."""
        u = np.sqrt(self.grid.weights) * np.asarray(f, float)
        return float(u @ self.sym_matrix @ u)


def discretize(kernel_values: KernelMatrix, grid: Grid, label: str = "L_K") -> DiscretizedOperator:
    nodes = np.asarray(kernel_values.nodes, float)
    if nodes.shape != grid.interior.shape or not np.array_equal(nodes, grid.interior):
        raise ShapeError("kernel matrix nodes do not match the grid interior nodes")
    sw = np.sqrt(grid.weights)
    A = sw[:, None] * kernel_values.values * sw[None, :]
    A = 0.5 * (A + A.T)
    return DiscretizedOperator(grid, A, label)


def operator_from_spectrum(grid: Grid, eigenvalues, eigenfunctions, label="other"):
    """Build sum_j e_j psi_j psi_j^T (quadrature sense) as a discretized operator."""
    sw = np.sqrt(grid.weights)
    V = np.asarray(eigenfunctions, float) * sw[:, None]
    A = (V * np.asarray(eigenvalues, float)) @ V.T
    return DiscretizedOperator(grid, 0.5 * (A + A.T), label)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Retained eigenpairs of a discretized operator.

    ``eigenfunctions[:, j]`` holds psi_j at the interior nodes and the columns
    are orthonormal under the quadrature inner product.
    """

    grid: Grid
    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray
    truncation_tol: float
    label: str = "other"

    @property
    def rank(self) -> int:
        return int(self.eigenvalues.size)

    @property
    def top(self) -> float:
        return float(self.eigenvalues[0]) if self.rank else 0.0

    @cached_property
    def weighted_vectors(self) -> np.ndarray:
        return self.eigenfunctions * np.sqrt(self.grid.weights)[:, None]

    @cached_property
    def sqrt_kernel_matrix(self) -> np.ndarray:
        """K^{1/2}(r_k, r_l) = sum_j sqrt(lambda_j) psi_j(r_k) psi_j(r_l)."""
        P = self.eigenfunctions
        S = (P * np.sqrt(self.eigenvalues)) @ P.T
        return 0.5 * (S + S.T)

    def coefficients(self, f) -> np.ndarray:
        """Quadrature inner products <f, psi_j> for retained j."""
        f = np.asarray(f, float)
        if f.shape[0] != self.grid.m:
            raise ShapeError(f"grid function must have {self.grid.m} values")
        return self.eigenfunctions.T @ (self.grid.weights * f.T).T

    def synthesize(self, coeffs) -> np.ndarray:
        c = np.asarray(coeffs, float)
        return self.eigenfunctions[:, : c.shape[0]] @ c

    def reconstruction_residual(self, op: DiscretizedOperator) -> float:
        """Spectral-norm residual of A minus its retained expansion, relative to lambda_1."""
        V = self.weighted_vectors
        R = op.sym_matrix - (V * self.eigenvalues) @ V.T
        return float(np.linalg.norm(R, 2) / max(self.top, np.finfo(float).tiny))

    # serialization -----------------------------------------------------
    def to_json(self, grid_ref: str = "") -> str:
        return json.dumps({
            "grid_ref": grid_ref,
            "label": self.label,
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "truncation_tol": self.truncation_tol,
        }, indent=1)

    def save(self, json_path, grid_path=None) -> None:
        """Write the JSON dump and an eigenfunction CSV sidecar (column j = psi_j)."""
        json_path = Path(json_path)
        grid_ref = ""
        if grid_path is not None:
            self.grid.save(grid_path)
            grid_ref = Path(grid_path).name
        json_path.write_text(self.to_json(grid_ref))
        side = json_path.with_suffix(".eigfun.csv")
        lines = [",".join(f"psi_{j + 1}" for j in range(self.rank))]
        lines += [",".join(repr(float(v)) for v in row) for row in self.eigenfunctions]
        side.write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, json_path, grid: Grid) -> "SpectralDecomposition":
        json_path = Path(json_path)
        d = json.loads(json_path.read_text())
        rows = json_path.with_suffix(".eigfun.csv").read_text().splitlines()[1:]
        P = np.array([[float(v) for v in r.split(",")] for r in rows if r])
        P = P.reshape(grid.m, len(d["eigenvalues"]))
        return cls(grid, np.array(d["eigenvalues"]), P, d["truncation_tol"], d.get("label", "other"))


def eigendecompose(op: DiscretizedOperator, tol: float = 1e-12) -> SpectralDecomposition:
    """Eigenpairs with lambda_j >= tol * lambda_1, sorted nonincreasing."""
    try:
        lam, V = np.linalg.eigh(op.sym_matrix)
    except np.linalg.LinAlgError as exc:
        cond = np.linalg.cond(op.sym_matrix)
        raise NumericError(f"eigensolver failed ({exc}); condition number {cond:.3e}") from exc
    lam = np.clip(lam[::-1], 0.0, None)
    V = V[:, ::-1]
    keep = lam >= tol * lam[0] if lam[0] > 0 else np.zeros(lam.size, bool)
    lam, V = lam[keep], V[:, keep]
    # fix signs so each vector's largest-magnitude entry is positive
    if V.size:
        idx = np.argmax(np.abs(V), axis=0)
        V = V * np.sign(V[idx, np.arange(V.shape[1])])
    psi = V / np.sqrt(op.grid.weights)[:, None]
    return SpectralDecomposition(op.grid, lam, psi, tol, op.label)


def fractional_apply(dec: SpectralDecomposition, r: float, f, inv_cutoff: float = 1e-8):
    """sum_j lambda_j^r <f, psi_j> psi_j over the retained span.

    For r < 0 only eigenvalues with lambda_j >= inv_cutoff * lambda_1 are used.
    """
    if r < -1:
        raise DomainError(f"power r={r} below -1 is not supported")
    lam = dec.eigenvalues
    coef = dec.coefficients(f)
    if r < 0:
        if inv_cutoff <= 0:
            raise DomainError("inv_cutoff must be positive for negative powers")
        keep = lam >= inv_cutoff * dec.top
        scale = np.zeros_like(lam)
        scale[keep] = lam[keep] ** r
    elif r == 0:
        scale = np.ones_like(lam)
    else:
        scale = lam ** r
    coef = (scale * coef.T).T
    return dec.eigenfunctions @ coef


def _node_index(grid: Grid, x) -> np.ndarray:
    x = np.asarray(x, float)
    r = grid.interior
    idx = np.searchsorted(r, x)
    idx = np.clip(idx, 0, r.size - 1)
    if not np.all(r[idx] == x):
        raise DomainError("sqrt kernel is only available at interior grid nodes")
    return idx


def sqrt_kernel_eval(dec: SpectralDecomposition, s, t):
    """K^{1/2}(s, t) for interior grid nodes s and t (no interpolation)."""
    i, j = _node_index(dec.grid, s), _node_index(dec.grid, t)
    out = dec.sqrt_kernel_matrix[i, j]
    return float(out) if np.ndim(out) == 0 else out


def compose_T_alpha(lk: SpectralDecomposition, lc: DiscretizedOperator) -> DiscretizedOperator:
    """L_K^{1/2} L_C L_K^{1/2} in weighted coordinates."""
    if lk.grid != lc.grid:
        raise ShapeError("L_K and L_C live on different grids")
    V = lk.weighted_vectors
    H = (V * np.sqrt(lk.eigenvalues)) @ V.T
    T = H @ lc.sym_matrix @ H
    return DiscretizedOperator(lk.grid, 0.5 * (T + T.T), "T_alpha")


@dataclass(frozen=True)
class EffectiveDimensionCurve:
    lambdas: np.ndarray
    values: np.ndarray


def effective_dimension(mu, lam):
    """N(lambda) = sum_j mu_j / (lambda + mu_j); ``lam`` may be an array."""
    mu = np.asarray(mu, float)
    lam_arr = np.asarray(lam, float)
    if np.any(lam_arr <= 0):
        raise DomainError("lambda must be positive")
    if np.any(mu < 0):
        raise DomainError("spectrum must be nonnegative")
    if lam_arr.ndim == 0:
        return float(np.sum(mu / (lam_arr + mu)))
    return np.array([np.sum(mu / (l + mu)) for l in lam_arr.ravel()]).reshape(lam_arr.shape)


def effective_dimension_curve(mu, lambdas) -> EffectiveDimensionCurve:
    lambdas = np.sort(np.asarray(lambdas, float))
    return EffectiveDimensionCurve(lambdas, effective_dimension(mu, lambdas))


def sobolev_norm(lk: SpectralDecomposition, beta, inv_cutoff: float = 1e-8, max_residual: float = 0.1) -> float:
    """Quadrature L2 norm of L_K^{-1/2} beta.

    Raises IllPosedError when more than ``max_residual`` of the squared L2
    mass of ``beta`` lies outside the span used for inversion.
    """
    beta = np.asarray(beta, float)
    total = float(lk.grid.weights @ beta**2)
    if total == 0.0:
        return 0.0
    coef = lk.coefficients(beta)
    keep = lk.eigenvalues >= inv_cutoff * lk.top
    inside = float(np.sum(coef[keep] ** 2))
    frac = max(0.0, 1.0 - inside / total)
    if frac > max_residual:
        raise IllPosedError(
            f"{frac:.1%} of the L2 mass lies outside the invertible span", residual_fraction=frac
        )
    return float(np.sqrt(np.sum(coef[keep] ** 2 / lk.eigenvalues[keep])))


def rho_estimate(mu) -> float:
    """sqrt(sum_j mu_j), i.e. sqrt of E||L_K^{1/2} X||^2 under the aligned model."""
    return float(np.sqrt(np.sum(np.asarray(mu, float))))
