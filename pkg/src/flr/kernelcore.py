"""Bernoulli polynomials and the unanchored Sobolev kernel on [0, 1].

For integer order ``alpha >= 1`` the kernel has the closed form

    K(s, t) = sum_{k=0}^{alpha} B_k(s) B_k(t) / (k!)^2
              + (-1)^(alpha+1) / (2 alpha)! * B_{2 alpha}(|s - t|)

where ``B_k`` are the Bernoulli polynomials.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial

import numpy as np

from .errors import CapacityError, DomainError
from .grid import Grid

ALPHA_MAX = 8


def bernoulli_numbers(n):
    """Exact Bernoulli numbers B_0..B_n with the B_1 = -1/2 convention."""
    B = [Fraction(1)]
    for k in range(1, n + 1):
        acc = sum(comb(k + 1, j) * B[j] for j in range(k))
        B.append(-acc / (k + 1))
    return B


@dataclass(frozen=True)
class BernoulliTable:
    """Monomial coefficients of B_0..B_max_degree, ascending powers."""

    max_degree: int
    coefficients: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.max_degree) != self.max_degree or self.max_degree < 0:
            raise DomainError(f"max_degree must be a nonnegative integer, got {self.max_degree}")
        nums = bernoulli_numbers(self.max_degree)
        coeffs = []
        for k in range(self.max_degree + 1):
            # B_k(t) = sum_j C(k, j) B_j t^(k-j)
            c = np.zeros(k + 1)
            for j in range(k + 1):
                c[k - j] = float(comb(k, j) * nums[j])
            coeffs.append(c)
        object.__setattr__(self, "coefficients", tuple(coeffs))

    def __call__(self, k, t):
        return bernoulli_poly(k, t, table=self)


_DEFAULT_TABLE = BernoulliTable(2 * ALPHA_MAX)


def bernoulli_poly(k, t, table=None):
    """Evaluate B_k at ``t`` (scalar or array) in [0, 1]."""
    table = _DEFAULT_TABLE if table is None else table
    if k < 0 or k > table.max_degree:
        raise CapacityError(f"degree {k} outside table capacity 0..{table.max_degree}")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0.0) or np.any(t_arr > 1.0) or np.any(np.isnan(t_arr)):
        raise DomainError("Bernoulli polynomials are evaluated on [0, 1] only")
    val = np.polynomial.polynomial.polyval(t_arr, table.coefficients[k])
    return float(val) if np.ndim(val) == 0 else val


@dataclass(frozen=True)
class SobolevKernelSpec:
    """Unanchored Sobolev kernel of integer order ``alpha``."""

    alpha: int
    table: BernoulliTable = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        a = self.alpha
        if isinstance(a, bool) or not isinstance(a, (int, np.integer)):
            if isinstance(a, (float, np.floating)) and float(a).is_integer():
                object.__setattr__(self, "alpha", int(a))
            else:
                raise DomainError(
                    f"only integer orders have a closed-form kernel, got alpha={a!r}"
                )
        if self.alpha < 1:
            raise DomainError(f"alpha must be >= 1, got {self.alpha}")
        if self.table is None:
            deg = max(2 * self.alpha, 2 * ALPHA_MAX)
            tab = _DEFAULT_TABLE if deg == _DEFAULT_TABLE.max_degree else BernoulliTable(deg)
            object.__setattr__(self, "table", tab)
        elif self.table.max_degree < 2 * self.alpha:
            raise CapacityError(
                f"table degree {self.table.max_degree} < 2*alpha = {2 * self.alpha}"
            )

    @property
    def inv_fact_sq(self):
        return np.array([1.0 / factorial(k) ** 2 for k in range(self.alpha + 1)])

    @property
    def tail_coef(self):
        return (-1.0) ** (self.alpha + 1) / factorial(2 * self.alpha)

    def __call__(self, s, t):
        return sobolev_kernel_eval(self, s, t)


def _check_unit(x, name):
    x = np.asarray(x, dtype=float)
    if np.any(np.isnan(x)) or np.any(x < 0.0) or np.any(x > 1.0):
        raise DomainError(f"{name} must lie in [0, 1]")
    return x


def sobolev_kernel_eval(spec, s, t):
    """K_alpha(s, t); ``s`` and ``t`` broadcast against each other."""
    s = _check_unit(s, "s")
    t = _check_unit(t, "t")
    tab = spec.table
    w = spec.inv_fact_sq
    out = np.zeros(np.broadcast(s, t).shape)
    for k in range(spec.alpha + 1):
        out = out + w[k] * (bernoulli_poly(k, s, tab) * bernoulli_poly(k, t, tab))
    out = out + spec.tail_coef * bernoulli_poly(2 * spec.alpha, np.abs(s - t), tab)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class KernelMatrix:
    """Dense symmetric matrix ``values[k, l] = K(nodes[k], nodes[l])``."""

    nodes: np.ndarray
    values: np.ndarray

    @property
    def size(self):
        return len(self.nodes)


def _mirror_upper(V):
    U = np.triu(V)
    return U + np.triu(V, 1).T


def gram(spec, nodes):
    """Kernel matrix on an arbitrary node list (upper triangle mirrored)."""
    nodes = np.asarray(nodes, dtype=float)
    V = sobolev_kernel_eval(spec, nodes[:, None], nodes[None, :])
    return KernelMatrix(nodes=nodes.copy(), values=_mirror_upper(np.atleast_2d(V)))


def kernel_matrix(spec, grid: Grid):
    """Kernel matrix on the m interior-sum nodes r_1..r_m of ``grid``."""
    return gram(spec, grid.interior)


def kernel_matrix_from(fn, grid: Grid):
    """Kernel matrix for an arbitrary vectorized kernel function ``fn(s, t)``."""
    r = grid.interior
    V = np.asarray(fn(r[:, None], r[None, :]), dtype=float)
    V = np.broadcast_to(V, (len(r), len(r)))
    return KernelMatrix(nodes=r.copy(), values=_mirror_upper(np.array(V)))
