"""Observation grids on [0, 1], left-endpoint Riemann sums and a rate probe."""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import DomainError, ShapeError


@dataclass(frozen=True)
class Grid:
    """Nodes 0 = r_1 < ... < r_{m+1} = 1 with weights w_k = r_{k+1} - r_k."""

    nodes: np.ndarray
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        r = np.array(self.nodes, dtype=float).ravel()
        if r.size < 2:
            raise DomainError("a grid needs at least two nodes")
        if not np.all(np.isfinite(r)):
            raise DomainError("grid nodes must be finite")
        if r[0] != 0.0 or r[-1] != 1.0:
            raise DomainError("grid endpoints must be exactly 0 and 1")
        w = np.diff(r)
        if np.any(w <= 0):
            raise DomainError("grid nodes must be strictly ascending")
        if abs(w.sum() - 1.0) > 1e-12:
            raise DomainError("grid weights do not sum to one")
        r.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "nodes", r)
        object.__setattr__(self, "weights", w)

    @property
    def m(self) -> int:
        return self.nodes.size - 1

    @property
    def interior(self) -> np.ndarray:
        """The m nodes r_1..r_m that carry quadrature weight."""
        return self.nodes[:-1]

    @property
    def mesh_constant(self) -> float:
        return float(self.m * self.weights.max())

    def __eq__(self, other):
        return isinstance(other, Grid) and np.array_equal(self.nodes, other.nodes)

    def __hash__(self):
        return hash(self.nodes.tobytes())

    # serialization -----------------------------------------------------
    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["node", "weight"])
        for k, r in enumerate(self.nodes):
            wr.writerow([repr(float(r)), repr(float(self.weights[k])) if k < self.m else ""])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Grid":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or [c.strip() for c in rows[0]] != ["node", "weight"]:
            raise ShapeError("grid CSV must start with header 'node,weight'")
        body = [r for r in rows[1:] if r]
        nodes = [float(r[0]) for r in body]
        if body and len(body[-1]) > 1 and body[-1][1].strip():
            raise ShapeError("last grid row must have a blank weight")
        return cls(np.array(nodes))

    def save(self, path) -> None:
        Path(path).write_text(self.to_csv())

    @classmethod
    def load(cls, path) -> "Grid":
        return cls.from_csv(Path(path).read_text())


def equispaced(m: int) -> Grid:
    if m < 1:
        raise DomainError(f"m must be >= 1, got {m}")
    r = np.arange(m + 1, dtype=float) / m
    return Grid(r)


@dataclass(frozen=True)
class SamplingScheme:
    """How interior observation points are placed.

    ``density`` holds piecewise-constant values on equal cells of [0, 1]
    and is only used for ``kind='iid_density'``.
    """

    kind: str = "equispaced"
    density: tuple = (1.0,)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("equispaced", "iid_density"):
            raise DomainError(f"unknown sampling kind {self.kind!r}")
        d = np.asarray(self.density, dtype=float)
        if d.ndim != 1 or d.size == 0:
            raise DomainError("density must be a nonempty list of cell values")
        if np.any(~np.isfinite(d)) or np.any(d <= 0):
            raise DomainError("density cells must be strictly positive")
        if abs(d.mean() - 1.0) > 1e-9:
            raise DomainError("density must integrate to one")
        object.__setattr__(self, "density", tuple(float(v) for v in d))

    @property
    def d_min(self) -> float:
        return min(self.density)


def _draw_density(density: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    K = density.size
    cell = rng.choice(K, size=n, p=density / density.sum())
    return (cell + rng.random(n)) / K


def make_grid(scheme: SamplingScheme, m: int) -> Grid:
    if int(m) != m or m < 1:
        raise DomainError(f"m must be a positive integer, got {m}")
    m = int(m)
    if scheme.kind == "equispaced":
        return equispaced(m)
    rng = np.random.default_rng(scheme.seed)
    pts = np.sort(_draw_density(np.asarray(scheme.density), m - 1, rng))
    # strict ordering: push ties (and a draw at 0) up by one ulp
    prev = 0.0
    for i in range(pts.size):
        if pts[i] <= prev:
            pts[i] = np.nextafter(prev, 2.0)
        prev = pts[i]
    if pts.size and pts[-1] >= 1.0:
        raise DomainError("degenerate draw at the right endpoint")
    return Grid(np.concatenate(([0.0], pts, [1.0])))


def riemann_sum(grid: Grid, samples) -> float:
    """Left-endpoint rule sum_k w_k f(r_k) over k = 1..m."""
    x = np.asarray(samples, dtype=float)
    if x.shape != (grid.m,):
        raise ShapeError(f"expected {grid.m} samples, got shape {x.shape}")
    return float(grid.weights @ x)


@dataclass
class RateResult:
    m_list: list
    errors: list
    slope: float | None
    saturated: bool
    expected: float

    def passes(self, tol: float = 0.2) -> bool:
        return self.saturated or (self.slope is not None and self.slope <= self.expected + tol)

    def to_dict(self):
        return {
            "m_list": list(self.m_list),
            "errors": [float(e) for e in self.errors],
            "slope": self.slope,
            "saturated": self.saturated,
            "expected": self.expected,
        }


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def quadrature_rate_test(
    alpha: int,
    f: Callable[[np.ndarray], np.ndarray],
    m_list: Sequence[int],
    exact: float | None = None,
    scheme: SamplingScheme | None = None,
) -> RateResult:
    """Fit the decay of the Riemann error |int f - sum w f(r)| against m.

    The reference integral comes from adaptive quadrature unless ``exact``
    is given.  Errors all below 1e-14 give a saturated report.
    """
    m_list = [int(v) for v in m_list]
    if len(m_list) < 4:
        raise DomainError("need at least four m values")
    if exact is None:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            exact = integrate.quad(lambda t: float(f(np.array([t]))[0]), 0.0, 1.0,
                                   epsabs=1e-15, epsrel=1e-14, limit=500)[0]
    scheme = scheme or SamplingScheme()
    errs = []
    for m in m_list:
        g = make_grid(scheme, m)
        errs.append(abs(riemann_sum(g, f(g.interior)) - exact))
    errs_arr = np.array(errs)
    expected = -(alpha - 0.5)
    if np.all(errs_arr < 1e-14):
        return RateResult(m_list, errs, None, True, expected)
    keep = errs_arr > 0
    slope = loglog_slope(np.array(m_list)[keep], errs_arr[keep])
    return RateResult(m_list, errs, slope, False, expected)
