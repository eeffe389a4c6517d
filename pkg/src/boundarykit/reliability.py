"""Reliability composition math and the fault-injection simulator.

An n-stage pipeline whose stages each succeed with probability p has p^n
end-to-end reliability; interposing k independent catch layers of strength q
shrinks error pass-through to (1-q)^k. The simulator checks both claims
empirically with seeded Bernoulli trials and reports 3-sigma agreement bands.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ReliabilityParams:
    p: float
    n: int
    q: float = 0.0
    k: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must be in [0, 1], got {self.p}")
        if not 0.0 <= self.q <= 1.0:
            raise ValueError(f"q must be in [0, 1], got {self.q}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.k < 0:
            raise ValueError(f"k must be >= 0, got {self.k}")


def chain_reliability(params: ReliabilityParams) -> float:
    return params.p ** params.n


def escape_probability(params: ReliabilityParams) -> float:
    return (1.0 - params.q) ** params.k


@dataclass(frozen=True)
class SimulationReport:
    params: ReliabilityParams
    trials: int
    seed: int
    empirical_end_to_end_success: float
    analytic_end_to_end_success: float
    empirical_escape_rate: float | None
    analytic_escape_rate: float
    error_bearing_trials: int
    success_sigma: float
    escape_sigma: float | None
    # Per-prefix curves for reporting: index i covers the first i stages/layers.
    stage_decay_empirical: tuple[float, ...] = field(default=())
    stage_decay_analytic: tuple[float, ...] = field(default=())
    layer_filtering_empirical: tuple[float, ...] = field(default=())
    layer_filtering_analytic: tuple[float, ...] = field(default=())

    @property
    def success_within_3sigma(self) -> bool:
        return abs(self.empirical_end_to_end_success - self.analytic_end_to_end_success) <= 3 * self.success_sigma

    @property
    def escape_within_3sigma(self) -> bool:
        if self.empirical_escape_rate is None or self.escape_sigma is None:
            return True
        return abs(self.empirical_escape_rate - self.analytic_escape_rate) <= 3 * self.escape_sigma

    def to_dict(self) -> dict:
        return {
            "params": {"p": self.params.p, "n": self.params.n, "q": self.params.q, "k": self.params.k},
            "trials": self.trials,
            "seed": self.seed,
            "empirical_end_to_end_success": self.empirical_end_to_end_success,
            "analytic_end_to_end_success": self.analytic_end_to_end_success,
            "empirical_escape_rate": self.empirical_escape_rate,
            "analytic_escape_rate": self.analytic_escape_rate,
            "error_bearing_trials": self.error_bearing_trials,
            "success_sigma": self.success_sigma,
            "escape_sigma": self.escape_sigma,
            "success_within_3sigma": self.success_within_3sigma,
            "escape_within_3sigma": self.escape_within_3sigma,
            "stage_decay_empirical": list(self.stage_decay_empirical),
            "stage_decay_analytic": list(self.stage_decay_analytic),
            "layer_filtering_empirical": list(self.layer_filtering_empirical),
            "layer_filtering_analytic": list(self.layer_filtering_analytic),
        }

    def summary_lines(self) -> list[str]:
        lines = [
            f"trials={self.trials} seed={self.seed} p={self.params.p} n={self.params.n} q={self.params.q} k={self.params.k}",
            f"end-to-end success: empirical={self.empirical_end_to_end_success:.6f} "
            f"analytic={self.analytic_end_to_end_success:.6f} (3sigma={3 * self.success_sigma:.6f}, "
            f"{'within' if self.success_within_3sigma else 'OUTSIDE'} band)",
        ]
        if self.empirical_escape_rate is not None and self.escape_sigma is not None:
            lines.append(
                f"escape rate over {self.error_bearing_trials} error-bearing trials: "
                f"empirical={self.empirical_escape_rate:.6f} analytic={self.analytic_escape_rate:.6f} "
                f"(3sigma={3 * self.escape_sigma:.6f}, "
                f"{'within' if self.escape_within_3sigma else 'OUTSIDE'} band)"
            )
        else:
            lines.append("escape rate: no error-bearing trials")
        return lines


def run_simulation(params: ReliabilityParams, trials: int, seed: int = 0) -> SimulationReport:
    """Monte Carlo over synthetic pipelines.

    Each trial injects a stage error with probability 1-p per stage; trials
    carrying at least one error then pass through k independent Bernoulli(q)
    catch layers, escaping only when every layer misses.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    p, n, q, k = params.p, params.n, params.q, params.k

    stage_ok = rng.random((trials, n)) < p
    clean = stage_ok.all(axis=1)
    emp_success = float(clean.mean())

    stage_prefix = np.cumprod(stage_ok, axis=1, dtype=np.float64).mean(axis=0)
    decay_emp = tuple(float(x) for x in stage_prefix)
    decay_ana = tuple(p ** i for i in range(1, n + 1))

    error_rows = ~clean
    error_count = int(error_rows.sum())

    catches = rng.random((trials, k)) < q if k > 0 else np.zeros((trials, 0), dtype=bool)
    if error_count > 0:
        missed = ~catches[error_rows]
        escaped = missed.all(axis=1)
        emp_escape: float | None = float(escaped.mean())
        if k > 0:
            layer_prefix = np.cumprod(missed, axis=1, dtype=np.float64).mean(axis=0)
            filt_emp = (1.0,) + tuple(float(x) for x in layer_prefix)
        else:
            filt_emp = (1.0,)
    else:
        emp_escape = None
        filt_emp = (1.0,)
    filt_ana = tuple((1.0 - q) ** j for j in range(0, k + 1))

    analytic_success = chain_reliability(params)
    analytic_escape = escape_probability(params)
    success_sigma = float(np.sqrt(analytic_success * (1 - analytic_success) / trials))
    escape_sigma = (
        float(np.sqrt(analytic_escape * (1 - analytic_escape) / error_count)) if error_count > 0 else None
    )

    return SimulationReport(
        params=params,
        trials=trials,
        seed=seed,
        empirical_end_to_end_success=emp_success,
        analytic_end_to_end_success=analytic_success,
        empirical_escape_rate=emp_escape,
        analytic_escape_rate=analytic_escape,
        error_bearing_trials=error_count,
        success_sigma=success_sigma,
        escape_sigma=escape_sigma,
        stage_decay_empirical=decay_emp,
        stage_decay_analytic=decay_ana,
        layer_filtering_empirical=filt_emp,
        layer_filtering_analytic=filt_ana,
    )
