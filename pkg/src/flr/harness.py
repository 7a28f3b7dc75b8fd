"""Experiment driver: rate sweeps, partition sweeps, filter audits, plot data."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats

from .distributed import fit_distributed
from .errors import ConfigError
from .estimator import estimation_error_W, gram_factor, prediction_risk
from .filters import FilterSpec, verify_filter_properties
from .grid import SamplingScheme, loglog_slope, make_grid
from .kernelcore import SobolevKernelSpec, kernel_matrix
from .operators import discretize, eigendecompose, rho_estimate
from .synth import NoiseSpec, build_ground_truth, gen_dataset

METRICS = ("estimation_W", "prediction_risk")
_METRIC_ALIASES = {"w": "estimation_W", "pred": "prediction_risk", "risk": "prediction_risk"}
DEFAULT_N = (256, 512, 1024, 2048, 4096, 8192)


@dataclass
class ExperimentConfig:
    alpha: int = 2
    p: float = 0.5
    theta: float = 1.0
    sigma: float = 0.5
    filter: str = "gf"
    N_list: tuple = DEFAULT_N
    m_rule: object = "auto"          # "auto" or an explicit list aligned with N_list
    m_safety: float = 2.0
    m_min: int | None = None         # defaults to 2J
    M_rule: object = "auto"          # "auto", an int, or a list aligned with N_list
    M_cap: int = 8
    trials: int = 20
    seed: int = 7
    J: int = 128
    g0_decay: float = 0.0
    inv_cutoff: float = 1e-12
    tolerance: float = 0.15
    min_points: int = 5
    gamma: float | None = None
    backend: str = "serial"
    output: str | None = None

    def __post_init__(self):
        self.N_list = tuple(int(n) for n in self.N_list)
        if list(self.N_list) != sorted(set(self.N_list)) or not self.N_list:
            raise ConfigError("N_list must be nonempty and strictly ascending")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        spec = FilterSpec.parse(self.filter)
        self.filter = str(spec)
        if self.theta > spec.nu_psi:
            raise ConfigError(f"theta={self.theta} exceeds the qualification {spec.nu_psi} of {spec}")
        if isinstance(self.m_rule, (list, tuple)):
            self.m_rule = [int(v) for v in self.m_rule]
            if len(self.m_rule) != len(self.N_list):
                raise ConfigError("explicit m list must match N_list")
        elif self.m_rule != "auto":
            raise ConfigError(f"unknown m_rule {self.m_rule!r}")
        if isinstance(self.M_rule, (list, tuple)):
            self.M_rule = [int(v) for v in self.M_rule]
            if len(self.M_rule) != len(self.N_list):
                raise ConfigError("explicit M list must match N_list")
        elif not (self.M_rule == "auto" or isinstance(self.M_rule, int)):
            raise ConfigError(f"unknown M_rule {self.M_rule!r}")
        for N in self.N_list:
            M = self.M_for(N)
            if N % M:
                raise ConfigError(f"M={M} does not divide N={N}")

    # schedules ---------------------------------------------------------
    @property
    def rate_denominator(self) -> float:
        return 1 + 2 * self.theta + self.p

    def lambda_for(self, N: int) -> float:
        return N ** (-1.0 / self.rate_denominator)

    def m_for(self, N: int) -> int:
        if isinstance(self.m_rule, list):
            return self.m_rule[self.N_list.index(N)]
        expo = (2 + 2 * self.theta) / ((2 * self.alpha - 1) * self.rate_denominator)
        floor = self.m_min if self.m_min is not None else 2 * self.J
        return max(int(floor), math.ceil(self.m_safety * N**expo))

    def M_for(self, N: int) -> int:
        if isinstance(self.M_rule, list):
            return self.M_rule[self.N_list.index(N)]
        if isinstance(self.M_rule, int):
            return self.M_rule
        return schedule_M(N, self.theta, self.p, self.M_cap)

    def theory_slope(self, metric: str) -> float:
        metric = normalize_metric(metric)
        num = 2 * self.theta if metric == "estimation_W" else 1 + 2 * self.theta
        return -num / self.rate_denominator

    # serialization -----------------------------------------------------
    def to_dict(self) -> dict:
        d = asdict(self)
        d["N_list"] = list(self.N_list)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))


def schedule_M(N: int, theta: float, p: float, cap: int = 8) -> int:
    """Largest power of two dividing N and below min(cap, N^{(1+2t-p)/(1+2t+p)} / log N)."""
    bound = min(cap, N ** ((1 + 2 * theta - p) / (1 + 2 * theta + p)) / math.log(N))
    M = 1
    while 2 * M <= bound and N % (2 * M) == 0:
        M *= 2
    return M


def normalize_metric(metric: str) -> str:
    metric = _METRIC_ALIASES.get(metric, metric)
    if metric not in METRICS:
        raise ConfigError(f"unknown metric {metric!r}")
    return metric


def trial_seeds(seed: int, N: int, trial: int) -> tuple:
    data_seed, part_seed = np.random.SeedSequence([seed, N, trial]).generate_state(2)
    return int(data_seed), int(part_seed)


@dataclass
class RateReport:
    metric: str
    rows: list
    slope: float | None
    ci_half_width: float | None
    theory_slope: float
    tolerance: float
    passed: bool | None
    exceedance: list = field(default_factory=list)
    gamma: float | None = None

    def summary(self) -> dict:
        return {"metric": self.metric, "slope": self.slope, "ci": self.ci_half_width,
                "theory_slope": self.theory_slope, "tolerance": self.tolerance, "pass": self.passed,
                "gamma": self.gamma, "exceedance": self.exceedance}


def fit_slope(N, err, level: float = 0.95):
    """OLS slope of log err on log N with a t-based confidence half-width."""
    x, y = np.log(np.asarray(N, float)), np.log(np.asarray(err, float))
    if x.size < 2:
        return None, None
    res = stats.linregress(x, y)
    if x.size < 3:
        return float(res.slope), None
    half = float(stats.t.ppf(0.5 + level / 2, x.size - 2) * res.stderr)
    return float(res.slope), half


def _world(cfg: ExperimentConfig, m: int, cache: dict):
    if m not in cache:
        kernel = SobolevKernelSpec(cfg.alpha)
        grid = make_grid(SamplingScheme(), m)
        lk = eigendecompose(discretize(kernel_matrix(kernel, grid), grid))
        gt = build_ground_truth(lk, cfg.p, cfg.theta, cfg.J, cfg.seed, kernel=kernel, sigma=cfg.sigma,
                                inv_cutoff=cfg.inv_cutoff, g0_decay=cfg.g0_decay)
        cache[m] = (kernel, grid, lk, gt, gt.lc, gram_factor(kernel, grid))
    return cache[m]


def collect_errors(cfg: ExperimentConfig, N: int, M: int | None = None, cache: dict | None = None) -> dict:
    """Per-trial errors for both metrics at sample size N (one shared fit per trial)."""
    cache = {} if cache is None else cache
    m = cfg.m_for(N)
    M = cfg.M_for(N) if M is None else M
    lam = cfg.lambda_for(N)
    kernel, grid, lk, gt, lc, gram = _world(cfg, m, cache)
    filt = FilterSpec.parse(cfg.filter)
    out = {k: [] for k in METRICS}
    for t in range(cfg.trials):
        data_seed, part_seed = trial_seeds(cfg.seed, N, t)
        data = gen_dataset(gt, grid, N, NoiseSpec(cfg.sigma), data_seed)
        est = fit_distributed(data, kernel, filt, lam, M, part_seed, backend=cfg.backend, gram=gram).estimate
        out["estimation_W"].append(estimation_error_W(est, gt.f0_coeffs, lk))
        out["prediction_risk"].append(prediction_risk(est, gt.beta0, lc, gram))
    return {"N": N, "lambda": lam, "m": m, "M": M, "errors": out}


def _report(cfg: ExperimentConfig, metric: str, per_N: list) -> RateReport:
    rows = []
    for r in per_N:
        e = np.array(r["errors"][metric])
        rows.append({"N": r["N"], "lambda": r["lambda"], "m": r["m"], "M": r["M"],
                     "median_error": float(np.median(e)), "mean_error": float(np.mean(e))})
    slope, half = fit_slope([r["N"] for r in rows], [r["median_error"] for r in rows])
    theory = cfg.theory_slope(metric)
    passed = None
    if slope is not None and len(rows) >= cfg.min_points:
        passed = bool(abs(slope - theory) <= cfg.tolerance)
    # in-probability view: share of trials above gamma * N^{theory}
    exceed, gamma = [], cfg.gamma
    if rows:
        if gamma is None:
            gamma = 2.0 * rows[0]["median_error"] / rows[0]["N"] ** theory
        for r in per_N:
            e = np.array(r["errors"][metric])
            exceed.append({"N": r["N"], "fraction": float(np.mean(e > gamma * r["N"] ** theory))})
    return RateReport(metric, rows, slope, half, theory, cfg.tolerance, passed, exceed, gamma)


def run_rate_experiments(cfg: ExperimentConfig, metrics: Sequence[str] = METRICS) -> dict:
    metrics = [normalize_metric(m) for m in metrics]
    cache: dict = {}
    per_N = [collect_errors(cfg, N, cache=cache) for N in cfg.N_list]
    return {m: _report(cfg, m, per_N) for m in metrics}


def run_rate_experiment(cfg: ExperimentConfig, metric: str = "estimation_W") -> RateReport:
    return run_rate_experiments(cfg, [metric])[normalize_metric(metric)]


def run_partition_sweep(cfg: ExperimentConfig, M_list: Sequence[int], N: int | None = None,
                        metric: str = "estimation_W", knee_factor: float = 1.5) -> dict:
    """Median error against M at fixed N and lambda."""
    metric = normalize_metric(metric)
    N = cfg.N_list[-1] if N is None else int(N)
    M_list = sorted(int(M) for M in M_list)
    for M in M_list:
        if N % M:
            raise ConfigError(f"M={M} does not divide N={N}")
    cache: dict = {}
    rows = []
    for M in M_list:
        r = collect_errors(cfg, N, M, cache)
        e = np.array(r["errors"][metric])
        rows.append({"M": M, "N": N, "lambda": r["lambda"], "m": r["m"],
                     "median_error": float(np.median(e)), "mean_error": float(np.mean(e))})
    base = rows[0]["median_error"] if rows else math.nan
    knee = next((r["M"] for r in rows if r["median_error"] > knee_factor * base), None)
    return {"metric": metric, "N": N, "baseline_M": rows[0]["M"] if rows else None,
            "knee_factor": knee_factor, "knee_M": knee, "rows": rows}


DEFAULT_AUDIT_LAMBDAS = (1e-3, 3e-3, 1e-2, 3e-2, 0.1, 0.3, 0.5)
DEFAULT_AUDIT_FILTERS = ("tr", "itr:s=2", "itr:s=4", "gf")


def default_rho(p: float = 0.5, J: int = 100_000) -> float:
    return rho_estimate(np.arange(1, J + 1, dtype=float) ** (-1.0 / p))


def run_filter_audit(specs=DEFAULT_AUDIT_FILTERS, lambda_list=DEFAULT_AUDIT_LAMBDAS,
                     rho: float | None = None, psi_overrides: dict | None = None) -> dict:
    rho = default_rho() if rho is None else rho
    reports = []
    for s in specs:
        spec = FilterSpec.parse(s) if isinstance(s, str) else s
        psi = (psi_overrides or {}).get(str(spec))
        reports.append(verify_filter_properties(spec, lambda_list, rho, psi=psi))
    return {"rho_alpha": rho, "lambdas": list(map(float, lambda_list)),
            "filters": reports, "pass": all(r["pass"] for r in reports)}


PLOT_COLUMNS = ("N", "lambda", "m", "M", "median_error", "mean_error")


def _fmt(v) -> str:
    return str(v) if isinstance(v, (int, np.integer)) else repr(float(v))


def emit_plotdata(report: RateReport, path) -> tuple:
    """Write ``path`` (CSV) and a JSON summary next to it."""
    path = Path(path)
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(PLOT_COLUMNS)
    for r in report.rows:
        wr.writerow([_fmt(r[c]) for c in PLOT_COLUMNS])
    path.write_text(buf.getvalue())
    summary = path.with_suffix(".json")
    summary.write_text(json.dumps(report.summary(), indent=1, sort_keys=True) + "\n")
    return path, summary


def read_plotdata(path) -> list:
    rows = list(csv.DictReader(io.StringIO(Path(path).read_text())))
    ints = {"N", "m", "M"}
    return [{c: (int(r[c]) if c in ints else float(r[c])) for c in PLOT_COLUMNS} for r in rows]
