"""Spectral filter functions Psi_lambda(t) approximating 1/t.

Three families are provided: Tikhonov ``tr``, iterated Tikhonov ``itr:s=k``
and gradient flow ``gf``.  Each carries its qualification and the constants
B, D, E and F_nu of the admissibility conditions checked by
:func:`verify_filter_properties`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, DomainError, ShapeError

KINDS = ("tikhonov", "iterated_tikhonov", "gradient_flow")
_ALIASES = {"tr": "tikhonov", "itr": "iterated_tikhonov", "gf": "gradient_flow"}
_SHORT = {v: k for k, v in _ALIASES.items()}
GF_SERIES_CUT = 1e-8  # below this t/lambda the filters use a two-term series


@dataclass(frozen=True)
class FilterSpec:
    kind: str
    s: int = 1

    def __post_init__(self):
        kind = _ALIASES.get(self.kind, self.kind)
        if kind not in KINDS:
            raise ConfigError(f"unknown filter kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if int(self.s) != self.s or self.s < 1:
            raise ConfigError(f"iterations s must be a positive integer, got {self.s}")
        object.__setattr__(self, "s", int(self.s))
        if kind != "iterated_tikhonov" and self.s != 1:
            raise ConfigError(f"{kind} takes no iteration count")

    @property
    def nu_psi(self) -> float:
        return {"tikhonov": 1.0, "iterated_tikhonov": float(self.s), "gradient_flow": math.inf}[self.kind]

    @property
    def B(self) -> float:
        return float(self.s) if self.kind == "iterated_tikhonov" else 1.0

    D = B
    E = B

    def F_nu(self, nu: float) -> float:
        if nu < 0 or nu > self.nu_psi:
            raise DomainError(f"nu={nu} outside [0, {self.nu_psi}]")
        if self.kind == "gradient_flow":
            return 1.0 if nu == 0 else (nu / math.e) ** nu
        return 1.0

    @classmethod
    def parse(cls, text: str) -> "FilterSpec":
        """Parse ``tr``, ``gf`` or ``itr:s=4`` (long kind names also accepted)."""
        text = text.strip().lower()
        head, _, rest = text.partition(":")
        kwargs = {}
        if rest:
            for item in rest.split(","):
                key, eq, val = item.partition("=")
                if not eq or key.strip() != "s":
                    raise ConfigError(f"cannot parse filter option {item!r}")
                try:
                    kwargs["s"] = int(val)
                except ValueError as exc:
                    raise ConfigError(f"iteration count must be an integer: {val!r}") from exc
        return cls(head, **kwargs)

    def __str__(self) -> str:
        short = _SHORT[self.kind]
        return f"{short}:s={self.s}" if self.kind == "iterated_tikhonov" else short


def _as_filter(spec) -> FilterSpec:
    return spec if isinstance(spec, FilterSpec) else FilterSpec.parse(str(spec))


def _check_lambda(lam: float) -> None:
    if not (0.0 < lam < 1.0):
        raise DomainError(f"lambda must lie in (0, 1), got {lam}")


def filter_eval(spec: FilterSpec, lam: float, t):
    """Psi_lambda(t) for scalar or array t >= 0."""
    spec = _as_filter(spec)
    _check_lambda(lam)
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or np.any(np.isnan(t_arr)):
        raise DomainError("filter argument t must be nonnegative")
    pos = t_arr > 0
    safe = np.where(pos, t_arr, 1.0)
    if spec.kind == "tikhonov":
        out = 1.0 / (lam + t_arr)
    elif spec.kind == "iterated_tikhonov":
        # (1 - (lam/(lam+t))^s) / t without cancellation
        x = t_arr / lam
        q = np.log1p(-safe / (lam + safe))
        series = spec.s / lam * (1.0 - 0.5 * (spec.s + 1) * x)
        out = np.where(x < GF_SERIES_CUT, series, -np.expm1(spec.s * q) / safe)
    else:
        x = t_arr / lam
        series = (1.0 - 0.5 * x) / lam
        out = np.where(x < GF_SERIES_CUT, series, -np.expm1(-x) / safe)
    return float(out) if out.ndim == 0 else out


def filter_apply(spec: FilterSpec, lam: float, A, return_spectrum: bool = False):
    """Q diag(Psi(clip(eig))) Q^T for symmetric A."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeError("filter_apply needs a square matrix")
    if np.abs(A - A.T).max(initial=0.0) > 1e-10 * max(1.0, np.abs(A).max(initial=0.0)):
        raise ShapeError("filter_apply needs a symmetric matrix")
    ev, Q = np.linalg.eigh(0.5 * (A + A.T))
    ev = np.clip(ev, 0.0, None)
    F = (Q * filter_eval(spec, lam, ev)) @ Q.T
    return (F, ev) if return_spectrum else F


def _nu_set(spec: FilterSpec):
    if math.isinf(spec.nu_psi):
        return [0.0, 1.0, 2.0, 4.0]
    return [0.0, spec.nu_psi / 2, spec.nu_psi]


def verify_filter_properties(
    spec: FilterSpec,
    lambda_list: Sequence[float],
    rho_alpha: float,
    slack: float = 0.05,
    n_points: int = 2001,
    t_max_factor: float = 10.0,
    psi: Callable | None = None,
) -> dict:
    """Numerically audit the three admissibility conditions.

    Sups are taken on log-spaced t grids: ``n_points`` on [0, cut] and on
    (cut, t_max_factor * cut], where cut = 3 rho / 2 + 1 / 2.  ``psi`` may
    replace the filter (signature ``psi(lam, t)``) to audit a modified one.
    Failures are reported, never raised.
    """
    spec = _as_filter(spec)
    if rho_alpha <= 0:
        raise DomainError("rho_alpha must be positive")
    fn = psi if psi is not None else (lambda lam, t: filter_eval(spec, lam, t))
    cut = 1.5 * rho_alpha + 0.5
    t_hi = t_max_factor * cut
    rows = []
    for lam in lambda_list:
        lam = float(lam)
        _check_lambda(lam)
        lo = np.concatenate(([0.0], np.geomspace(lam * 1e-8, cut, n_points - 1)))
        hi = np.geomspace(cut, t_hi, n_points)[1:]
        v_lo = fn(lam, lo)
        v_hi = fn(lam, hi)
        p1 = float(np.max(np.abs((lam + lo) * v_lo)))
        p3 = float(np.max(np.abs((lam + hi) * v_hi)))
        res = np.abs(1.0 - lo * v_lo)
        p2 = []
        for nu in _nu_set(spec):
            sup = float(np.max(res * lo**nu))
            bound = spec.F_nu(nu) * lam**nu
            p2.append({"nu": nu, "sup": sup, "bound": bound, "pass": sup <= bound * (1 + slack)})
        rows.append({
            "lambda": lam,
            "prop1": {"sup": p1, "bound": spec.B, "pass": p1 <= spec.B * (1 + slack)},
            "prop2": p2,
            "prop3": {"sup": p3, "bound": spec.D, "pass": p3 <= spec.D * (1 + slack)},
        })
    passes = {
        "prop1": all(r["prop1"]["pass"] for r in rows),
        "prop2": all(e["pass"] for r in rows for e in r["prop2"]),
        "prop3": all(r["prop3"]["pass"] for r in rows),
    }
    return {
        "filter": str(spec),
        "nu_psi": spec.nu_psi if math.isfinite(spec.nu_psi) else "inf",
        "B": spec.B,
        "D": spec.D,
        "E": spec.E,
        "rho_alpha": float(rho_alpha),
        "cut": cut,
        "t_max": t_hi,
        "slack": slack,
        "per_lambda": rows,
        "passes": passes,
        "pass": all(passes.values()),
    }
