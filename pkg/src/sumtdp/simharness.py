"""Monte Carlo study harness: correlated data, combiners, error and power tables.

Each replication draws an n x m Gaussian sample whose columns share an
equicorrelation (one common factor per observation), plants signal in the
first ceil(a*m) columns, builds a sign-flip matrix of two-sided t statistics,
converts every entry to a two-sided p-value, applies a combiner, optionally
floor-truncates on the p scale, and queries discovery bounds for the active
and inactive column sets.  The signal size is calibrated so that a single
two-sided one-sample t-test at the study's level reaches a requested power.

Aggregates of interest: the familywise error rate is the share of
replications reporting any discovery inside the inactive (all-null) set; the
power summary is the mean TDP bound over the active set.  Replications use
independent generator streams keyed by (seed, replication index), so results
do not depend on execution order and a fixed seed reproduces the table
exactly.
"""

import math
import time
from dataclasses import dataclass, fields

import numpy as np
from scipy import optimize
from scipy import stats as scipy_stats

from .combiners import Combiner, TruncationRule, apply_combiner, truncate
from .generators import TransformationScheme, sign_flip_matrix
from .inference import discoveries_matrix
from .statmatrix import StatisticMatrix, TestConfig

__all__ = [
    "SimulationConfig",
    "ReplicationOutcome",
    "StudyResult",
    "effect_size",
    "simulate_data",
    "run_replication",
    "run_study",
    "run_grid",
    "GRID_COLUMNS",
]


@dataclass(frozen=True)
class SimulationConfig:
    """One study cell: data model, test settings and budgets.

    ``truncate_p`` and ``ground_p`` are on the p scale; entries with p-value
    above ``truncate_p`` are floored at the combiner's value of ``ground_p``
    (truncation happens after combining, which is the same thing because
    combiners are decreasing).  ``ground_p`` also feeds the column reduction.
    ``power_target`` is the marginal two-sided t-test power that calibrates
    the planted effect size.
    """

    n_obs: int = 50
    n_hyps: int = 100
    active_fraction: float = 0.2
    correlation: float = 0.0
    alpha: float = 0.05
    n_transforms: int = 200
    n_reps: int = 200
    seed: int = 0
    combiner: str = "fisher"
    truncate_p: float = None
    ground_p: float = 0.5
    power_target: float = 0.95
    step_budget: int = 50
    total_budget: int = None

    def __post_init__(self):
        if self.n_obs < 2:
            raise ValueError("n_obs must be at least 2")
        if self.n_hyps < 1:
            raise ValueError("n_hyps must be at least 1")
        if not 0.0 <= self.active_fraction <= 1.0:
            raise ValueError("active_fraction must lie in [0, 1]")
        if not 0.0 <= self.correlation < 1.0:
            raise ValueError("correlation must lie in [0, 1)")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.n_transforms < 2:
            raise ValueError("n_transforms must be at least 2")
        if self.n_reps < 1:
            raise ValueError("n_reps must be at least 1")
        if not 0.0 < self.power_target < 1.0:
            raise ValueError("power_target must lie in (0, 1)")
        if self.truncate_p is not None:
            if not 0.0 < self.truncate_p <= 1.0:
                raise ValueError("truncate_p must lie in (0, 1]")
            if not self.truncate_p <= self.ground_p <= 1.0:
                raise ValueError("ground_p must lie in [truncate_p, 1]")
        Combiner.parse(self.combiner)  # fail here, not mid-study

    @property
    def n_active(self) -> int:
        # ceil(a*m), guarded against float residue (0.02*100 -> 2, not 3)
        return math.ceil(self.active_fraction * self.n_hyps - 1e-9)

    @classmethod
    def from_dict(cls, raw: dict) -> "SimulationConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ValueError(
                f"unknown config keys: {', '.join(unknown)}; known keys: "
                + ", ".join(sorted(known))
            )
        return cls(**raw)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def effect_size(n_obs: int, alpha: float, power: float) -> float:
    """Mean shift giving a two-sided one-sample t-test the requested power.

    Solves the noncentral-t power equation numerically (unit variance; the
    noncentrality is mean * sqrt(n)).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if not alpha < power < 1.0:
        raise ValueError("power must lie strictly between alpha and 1")
    df = n_obs - 1
    tcrit = scipy_stats.t.isf(alpha / 2.0, df)

    def attained(mu):
        nc = mu * math.sqrt(n_obs)
        upper = scipy_stats.nct.sf(tcrit, df, nc)
        lower = scipy_stats.nct.cdf(-tcrit, df, nc)
        # far in the right tail the lower-tail mass underflows to NaN
        if math.isnan(lower):
            lower = 0.0
        return upper + lower - power

    return float(optimize.brentq(attained, 0.0, 20.0, xtol=1e-12))


def simulate_data(cfg: SimulationConfig, rep: int, effect: float) -> np.ndarray:
    """One replication's data: equicorrelated noise plus planted signal.

    The common factor construction sqrt(rho)*shared + sqrt(1-rho)*own gives
    every pair of columns correlation rho exactly.
    """
    rng = np.random.default_rng((cfg.seed, rep, 0))
    shared = rng.standard_normal((cfg.n_obs, 1))
    own = rng.standard_normal((cfg.n_obs, cfg.n_hyps))
    data = math.sqrt(cfg.correlation) * shared + math.sqrt(1.0 - cfg.correlation) * own
    if cfg.n_active:
        data[:, : cfg.n_active] += effect
    return data


@dataclass(frozen=True)
class ReplicationOutcome:
    """Discovery results of one replication, keyed by query name."""

    rep: int
    results: dict  # name -> DiscoveryResult (absent names were empty sets)


def _query_columns(cfg: SimulationConfig, name: str):
    if name == "active":
        return tuple(range(cfg.n_active))
    if name == "inactive":
        return tuple(range(cfg.n_active, cfg.n_hyps))
    if name == "all":
        return tuple(range(cfg.n_hyps))
    raise ValueError(f"unknown query name {name!r}; use active, inactive or all")


def run_replication(
    cfg: SimulationConfig,
    rep: int,
    effect: float,
    queries=("active", "inactive"),
) -> ReplicationOutcome:
    data = simulate_data(cfg, rep, effect)
    scheme = TransformationScheme(
        kind="sign_flip", n_transforms=cfg.n_transforms, seed=(cfg.seed, rep, 1)
    )
    tstats = sign_flip_matrix(data, scheme)
    pvals = 2.0 * scipy_stats.t.sf(tstats.values, cfg.n_obs - 1)
    comb = Combiner.parse(cfg.combiner)
    evidence = apply_combiner(StatisticMatrix(pvals), comb)
    ground = None
    if cfg.truncate_p is not None:
        threshold = float(comb.transform(np.array([cfg.truncate_p]))[0])
        ground = float(comb.transform(np.array([cfg.ground_p]))[0])
        evidence = truncate(evidence, TruncationRule(threshold=threshold, ground=ground))
    test_cfg = TestConfig(cfg.alpha, cfg.n_transforms)
    results = {}
    for name in queries:
        cols = _query_columns(cfg, name)
        if not cols:
            continue
        results[name] = discoveries_matrix(
            evidence, test_cfg, cols,
            reduction_ground=ground,
            total_budget=cfg.total_budget,
            step_budget=cfg.step_budget,
        )
    return ReplicationOutcome(rep=rep, results=results)


@dataclass(frozen=True)
class StudyResult:
    """All replications of one cell plus timing."""

    config: SimulationConfig
    effect: float
    outcomes: tuple
    wall_time: float

    def tdp_values(self, query: str = "active") -> np.ndarray:
        return np.array(
            [o.results[query].tdp for o in self.outcomes if query in o.results]
        )

    def mean_tdp(self, query: str = "active") -> float:
        values = self.tdp_values(query)
        return float(values.mean()) if values.size else float("nan")

    def family_error_rate(self) -> float:
        """Share of replications reporting any discovery among true nulls."""
        flags = [
            o.results["inactive"].discoveries > 0
            for o in self.outcomes
            if "inactive" in o.results
        ]
        return float(np.mean(flags)) if flags else float("nan")

    def mean_wall_time(self) -> float:
        return self.wall_time / len(self.outcomes)


def run_study(
    cfg: SimulationConfig,
    queries=("active", "inactive"),
    threads: int = 1,
) -> StudyResult:
    """Run every replication of one cell and collect the outcomes.

    Replications are independent; ``threads > 1`` runs them on a thread
    pool.  Outcomes are returned in replication order regardless.
    """
    effect = (
        effect_size(cfg.n_obs, cfg.alpha, cfg.power_target)
        if cfg.n_active
        else 0.0
    )
    start = time.perf_counter()
    if threads > 1 and cfg.n_reps > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(
                pool.map(
                    lambda rep: run_replication(cfg, rep, effect, queries),
                    range(cfg.n_reps),
                )
            )
    else:
        outcomes = [
            run_replication(cfg, rep, effect, queries) for rep in range(cfg.n_reps)
        ]
    wall = time.perf_counter() - start
    return StudyResult(config=cfg, effect=effect, outcomes=tuple(outcomes), wall_time=wall)


GRID_COLUMNS = (
    "n_obs", "n_hyps", "active_fraction", "correlation", "alpha",
    "n_transforms", "n_reps", "seed", "combiner", "truncate_p", "ground_p",
    "power_target", "step_budget", "total_budget",
    "mean_tdp_active", "fwer", "mean_wall_time_s", "error",
)


def run_grid(cells, threads: int = 1) -> list:
    """Run many cells, one row of aggregates each; failures become rows too.

    A cell that raises is recorded with its error message and the grid keeps
    going, so a long sweep is never lost to one bad configuration.
    """
    rows = []
    for cfg in cells:
        row = {key: "" for key in GRID_COLUMNS}
        row.update(cfg.to_dict())
        try:
            study = run_study(cfg, threads=threads)
            mean_tdp = study.mean_tdp("active")
            fwer = study.family_error_rate()
            row["mean_tdp_active"] = "" if math.isnan(mean_tdp) else mean_tdp
            row["fwer"] = "" if math.isnan(fwer) else fwer
            row["mean_wall_time_s"] = study.mean_wall_time()
        except Exception as exc:  # per-cell isolation is the contract here
            row["error"] = str(exc)
        rows.append(row)
    return rows
