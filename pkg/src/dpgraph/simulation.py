"""Monte-Carlo harness: sample, privatize, fit, and tally coverage.

Each replication derives its own RNG stream from (master seed, rep_index)
through splitmix64, so replications are independent, order-insensitive,
and bit-reproducible under any degree of concurrency:

    stream_seed = splitmix64(master_seed XOR splitmix64(rep_index))

True parameters follow a linear ramp: alpha*_{i+1} = (n-1-i) L / (n-1),
so alpha*_1 = L down to alpha*_n = 0, with beta* = alpha* except the
pinned beta*_n = 0.  L and epsilon are named schedules resolved against n
(natural logarithms throughout).

Coverage and interval lengths are tallied only over replications where the
estimate exists; the non-existence frequency is reported separately.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .errors import DomainError
from .estimator import (
    STAT_KINDS,
    _stat_indices,
    confidence_interval,
    newton_solve,
    standardized_stats,
    variance_estimates,
)
from .graph import ParameterVector, degrees, expected_bidegree, sample_graph
from .model import get_model
from .privacy import deviation_bound, privatize

__all__ = [
    "ExperimentConfig",
    "StatRecord",
    "RepRecord",
    "CoverageRow",
    "CoverageReport",
    "ExperimentResult",
    "L_SPECS",
    "EPS_SPECS",
    "derive_stream_seed",
    "resolve_L",
    "resolve_epsilon",
    "default_pairs",
    "make_true_params",
    "run_replication",
    "run_experiment",
    "qq_export",
    "qq_csv",
]

L_SPECS = ("zero", "loglogn", "sqrtlogn")
EPS_SPECS = ("fixed:<value>", "logn_n14", "logn_n12")

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_stream_seed(master_seed: int, rep_index: int) -> int:
    """Per-replication stream seed: splitmix64(master XOR splitmix64(rep))."""
    return _splitmix64((master_seed ^ _splitmix64(rep_index)) & _MASK64)


def resolve_L(L_spec: str, n: int) -> float:
    if L_spec == "zero":
        return 0.0
    if L_spec == "loglogn":
        return math.log(math.log(n))
    if L_spec == "sqrtlogn":
        return math.sqrt(math.log(n))
    raise DomainError(f"unknown L spec {L_spec!r}; allowed: {L_SPECS}")


def resolve_epsilon(eps_spec: str, n: int) -> float:
    if eps_spec.startswith("fixed:"):
        try:
            value = float(eps_spec[6:])
        except ValueError:
            raise DomainError(f"bad fixed epsilon in {eps_spec!r}") from None
        if not (value > 0.0):
            raise DomainError("fixed epsilon must be positive")
        return value
    if eps_spec == "logn_n14":
        return math.log(n) / n**0.25
    if eps_spec == "logn_n12":
        return math.log(n) / math.sqrt(n)
    raise DomainError(f"unknown epsilon spec {eps_spec!r}; allowed: {EPS_SPECS}")


def default_pairs(n: int) -> tuple[tuple[int, int], ...]:
    """The three probe pairs (1,2), (n/2, n/2+1), (n-1, n)."""
    return ((1, 2), (n // 2, n // 2 + 1), (n - 1, n))


def make_true_params(n: int, L_spec: str) -> ParameterVector:
    """Linear ramp of true strengths from L down to 0; beta mirrors alpha."""
    if n < 2:
        raise DomainError("n must be >= 2")
    L = resolve_L(L_spec, n)
    i = np.arange(n)
    alpha = (n - 1 - i) * L / (n - 1)
    beta = alpha.copy()
    beta[-1] = 0.0
    return ParameterVector(alpha=alpha, beta=beta)


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    L_spec: str = "zero"
    eps_spec: str = "fixed:2"
    reps: int = 1000
    seed: int = 0
    pairs: tuple[tuple[int, int], ...] | None = None
    model: str = "probit"
    stat_kinds: tuple[str, ...] = ("xi",)
    level: float = 0.95

    def __post_init__(self):
        if self.n < 4:
            raise DomainError("n must be >= 4")
        if self.reps < 1:
            raise DomainError("reps must be >= 1")
        resolve_L(self.L_spec, self.n)
        resolve_epsilon(self.eps_spec, self.n)
        get_model(self.model)
        if self.pairs is None:
            object.__setattr__(self, "pairs", default_pairs(self.n))
        if not self.pairs or not self.stat_kinds:
            raise DomainError("need at least one pair and one statistic kind")
        for kind in self.stat_kinds:
            if kind not in STAT_KINDS:
                raise DomainError(f"stat kind must be one of {STAT_KINDS}")
            for i, j in self.pairs:
                _stat_indices(kind, i, j, self.n)  # validates bounds per kind


@dataclass(frozen=True)
class StatRecord:
    pair_i: int
    pair_j: int
    kind: str
    value: float
    covered: bool
    ci_length: float
    ci_half_length: float


@dataclass(frozen=True)
class RepRecord:
    rep_index: int
    epsilon: float
    exists: bool
    reason: str | None
    iterations: int
    deviation_ok: bool
    stats: tuple[StatRecord, ...] = field(default_factory=tuple)


def run_replication(cfg: ExperimentConfig, rep_index: int) -> RepRecord:
    """One sample -> privatize -> fit -> test pass, on its own RNG stream."""
    rng = np.random.default_rng(derive_stream_seed(cfg.seed, rep_index))
    model = get_model(cfg.model)
    theta_star = make_true_params(cfg.n, cfg.L_spec)
    graph = sample_graph(theta_star, model, rng)
    eps = resolve_epsilon(cfg.eps_spec, cfg.n)
    noisy = privatize(degrees(graph), eps, rng)

    exp_out, exp_in = expected_bidegree(theta_star, model)
    dev = max(
        float(np.abs(noisy.z_out - exp_out).max()),
        float(np.abs(noisy.z_in - exp_in).max()),
    )
    dev_ok = dev <= deviation_bound(cfg.n, eps)

    fit = newton_solve(noisy, model)
    stats: list[StatRecord] = []
    if fit.exists:
        fit = fit.with_variance(variance_estimates(fit.theta, model, noisy.params))
        q = float(ndtri(0.5 + cfg.level / 2.0))
        for kind in cfg.stat_kinds:
            values = standardized_stats(fit, theta_star, cfg.pairs, kind=kind)
            for (i, j), val in zip(cfg.pairs, values):
                ci = confidence_interval(fit, (i, j), level=cfg.level, kind=kind)
                stats.append(
                    StatRecord(
                        pair_i=i,
                        pair_j=j,
                        kind=kind,
                        value=float(val),
                        covered=bool(abs(val) <= q),
                        ci_length=ci.length,
                        ci_half_length=ci.half_length,
                    )
                )
    return RepRecord(
        rep_index=rep_index,
        epsilon=eps,
        exists=fit.exists,
        reason=fit.reason,
        iterations=fit.iterations,
        deviation_ok=dev_ok,
        stats=tuple(stats),
    )


@dataclass(frozen=True)
class CoverageRow:
    n: int
    L_spec: str
    eps_spec: str
    pair_i: int
    pair_j: int
    stat_kind: str
    coverage: float
    ci_length_full: float
    ci_length_half: float
    nonexist_freq: float
    reps: int


@dataclass(frozen=True)
class CoverageReport:
    rows: tuple[CoverageRow, ...]
    nonexist_freq: float
    deviation_ok_freq: float
    reps: int
    runtime_seconds: float

    CSV_HEADER = (
        "n,L_spec,eps_spec,pair_i,pair_j,stat_kind,coverage,"
        "ci_length_full,ci_length_half,nonexist_freq,reps"
    )

    def to_csv(self) -> str:
        lines = [self.CSV_HEADER]
        for r in self.rows:
            lines.append(
                f"{r.n},{r.L_spec},{r.eps_spec},{r.pair_i},{r.pair_j},"
                f"{r.stat_kind},{r.coverage!r},{r.ci_length_full!r},"
                f"{r.ci_length_half!r},{r.nonexist_freq!r},{r.reps}"
            )
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ExperimentResult:
    report: CoverageReport
    records: tuple[RepRecord, ...]

    def stat_values(self, pair: tuple[int, int], kind: str = "xi") -> np.ndarray:
        """Pooled statistic values for one (pair, kind) over existing reps."""
        vals = [
            s.value
            for rec in self.records
            for s in rec.stats
            if (s.pair_i, s.pair_j) == pair and s.kind == kind
        ]
        return np.asarray(vals)


def _rep_task(args: tuple[ExperimentConfig, int]) -> RepRecord:
    cfg, rep_index = args
    return run_replication(cfg, rep_index)


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    """Run all replications and aggregate the coverage table.

    workers > 1 fans replications out to a process pool; workers = 0 means
    one worker per CPU.  Aggregation sorts by rep_index, so the result is
    bit-identical for any worker count.
    """
    start = time.perf_counter()
    if workers == 0:
        workers = os.cpu_count() or 1
    if workers <= 1:
        records = [run_replication(cfg, i) for i in range(cfg.reps)]
    else:
        tasks = [(cfg, i) for i in range(cfg.reps)]
        chunk = max(1, cfg.reps // (workers * 8))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_rep_task, tasks, chunksize=chunk))
    records.sort(key=lambda r: r.rep_index)

    n_exist = sum(1 for r in records if r.exists)
    nonexist_freq = 1.0 - n_exist / cfg.reps
    dev_freq = sum(1 for r in records if r.deviation_ok) / cfg.reps

    rows = []
    for kind in cfg.stat_kinds:
        for i, j in cfg.pairs:
            covered, full, half = [], [], []
            for rec in records:
                for s in rec.stats:
                    if (s.pair_i, s.pair_j, s.kind) == (i, j, kind):
                        covered.append(s.covered)
                        full.append(s.ci_length)
                        half.append(s.ci_half_length)
            rows.append(
                CoverageRow(
                    n=cfg.n,
                    L_spec=cfg.L_spec,
                    eps_spec=cfg.eps_spec,
                    pair_i=i,
                    pair_j=j,
                    stat_kind=kind,
                    coverage=float(np.mean(covered)) if covered else float("nan"),
                    ci_length_full=float(np.mean(full)) if full else float("nan"),
                    ci_length_half=float(np.mean(half)) if half else float("nan"),
                    nonexist_freq=nonexist_freq,
                    reps=cfg.reps,
                )
            )
    report = CoverageReport(
        rows=tuple(rows),
        nonexist_freq=nonexist_freq,
        deviation_ok_freq=dev_freq,
        reps=cfg.reps,
        runtime_seconds=time.perf_counter() - start,
    )
    return ExperimentResult(report=report, records=tuple(records))


def qq_export(values) -> list[tuple[int, float, float]]:
    """Pair sorted statistics with standard-normal plotting quantiles.

    Rank k (1-based) maps to the theoretical quantile at (k - 0.5)/R.
    """
    vals = np.sort(np.asarray(values, dtype=float))
    if vals.ndim != 1 or vals.size < 2:
        raise DomainError("need at least 2 values for a QQ table")
    if not np.all(np.isfinite(vals)):
        raise DomainError("QQ input must be finite")
    r = vals.size
    theo = ndtri((np.arange(1, r + 1) - 0.5) / r)
    return [(k + 1, float(vals[k]), float(theo[k])) for k in range(r)]


def qq_csv(rows: list[tuple[int, float, float]]) -> str:
    lines = ["rank,empirical,theoretical"]
    for rank, emp, theo in rows:
        lines.append(f"{rank},{emp!r},{theo!r}")
    return "\n".join(lines) + "\n"
