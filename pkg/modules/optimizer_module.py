"""
Numerical search for the utilization-maximizing checkpoint policy.

The joint search runs Nelder-Mead over (log T, softmax logits) from several starts and
polishes every start with cyclic coordinate line searches: golden section on T, then
projected line searches along each simplex direction e_i - (1/L) 1.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq, minimize
from scipy.special import softmax
from scipy.stats import qmc

from .errors_module import Policy_Diverges_Error, Validation_Error
from .model_module import Policy, System_Spec, evaluate
from .numerics_module import maximize_1d, project_to_simplex
from .settings_module import Settings

logger = logging.getLogger(__name__)

STRATEGY_TOP = "top"
STRATEGY_ANCHORED = "anchored"

@dataclass(frozen=True)
class Optimizer_Config:
    """
    Search settings.

    Attributes:
        T_bounds (Optional[Tuple[float, float]]): (lo, hi) seconds; None derives (max c + 1, min(10 / lambda_1, 1e6)).
        multistarts (int): Number of starts; start 0 is a deterministic anchor, the rest are Latin-hypercube.
        simplex_tolerance (float): Utilization change below which a refinement cycle counts as converged.
        T_tolerance (float): Interval change in seconds below which a refinement cycle counts as converged.
        seed (int): Seed of the Latin-hypercube starts.
        workers (int): Threads used to run starts concurrently.
    """
    T_bounds: Optional[Tuple[float, float]] = None
    multistarts: int = Settings.optimizer.MULTISTARTS
    simplex_tolerance: float = Settings.optimizer.SIMPLEX_TOLERANCE
    T_tolerance: float = Settings.optimizer.T_TOLERANCE
    seed: int = Settings.optimizer.SEED
    workers: int = Settings.optimizer.WORKERS

    def __post_init__(self) -> None:
        if self.multistarts < 1:
            raise Validation_Error(f"Invalid value for 'multistarts': expected >= 1, got {self.multistarts}")
        if self.workers < 1:
            raise Validation_Error(f"Invalid value for 'workers': expected >= 1, got {self.workers}")
        if not self.simplex_tolerance > 0 or not self.T_tolerance > 0:
            raise Validation_Error(
                f"Invalid tolerances: expected simplex_tolerance > 0 and T_tolerance > 0, got {self.simplex_tolerance}, {self.T_tolerance}"
            )
        if self.T_bounds is not None:
            lo, hi = self.T_bounds
            object.__setattr__(self, "T_bounds", (float(lo), float(hi)))

    def resolve_bounds(self, spec: System_Spec) -> Tuple[float, float]:
        """
        Returns the interval search range for `spec`.

        Raises:
            Validation_Error: If lo <= max c_l or lo >= hi.
        """
        max_cost = float(np.max(spec.checkpoint_costs))
        if self.T_bounds is None:
            lo = max_cost + Settings.optimizer.T_LOWER_MARGIN
            lambda1 = float(spec.failure_rates[0])
            hi = Settings.optimizer.T_UPPER_CAP
            if lambda1 > 0:
                hi = min(Settings.optimizer.T_UPPER_FAILURE_MULTIPLE / lambda1, hi)
        else:
            lo, hi = self.T_bounds
        if not lo > max_cost:
            raise Validation_Error(f"Infeasible bounds: expected T lower bound > max checkpoint cost {max_cost}, got {lo}")
        if not lo < hi:
            raise Validation_Error(f"Infeasible bounds: expected lo < hi, got ({lo}, {hi})")
        return lo, hi

@dataclass(frozen=True)
class Optimization_Result:
    """
    Outcome of a policy search.

    Attributes:
        best_policy (Policy): (T*, p*).
        best_utilization (float): U*.
        evaluations (int): Model evaluations spent across all starts.
        restarts_used (int): Starts that were run.
        converged (bool): Whether the winning start met both convergence tolerances.
        plateau_width (Optional[float]): Width in seconds of the T range at p* whose utilization is within 1e-4 of U*.
    """
    best_policy: Policy
    best_utilization: float
    evaluations: int
    restarts_used: int
    converged: bool
    plateau_width: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "T": self.best_policy.interval,
            "probabilities": list(self.best_policy.probabilities),
            "utilization": self.best_utilization,
            "evaluations": self.evaluations,
            "restarts_used": self.restarts_used,
            "converged": self.converged,
            "plateau_width": self.plateau_width,
        }

@dataclass(frozen=True)
class Level_Comparison_Row:
    """
    One row of a level comparison: the optimum using only `levels`.

    Attributes:
        levels (Tuple[int, ...]): Retained levels (1-based, original numbering).
        T_star (float): Optimal interval.
        p_star (Tuple[float, ...]): Optimal probabilities over all original levels, zero for dropped ones.
        utilization (float): Optimal utilization.
        pct_increase (float): Percentage gain over the single-level row.
        gain_over_previous (float): Percentage gain over the previous row.
    """
    levels: Tuple[int, ...]
    T_star: float
    p_star: Tuple[float, ...]
    utilization: float
    pct_increase: float
    gain_over_previous: float

    def to_dict(self) -> dict:
        return {
            "levels": list(self.levels),
            "T_star": self.T_star,
            "p_star": list(self.p_star),
            "utilization": self.utilization,
            "pct_increase": self.pct_increase,
            "gain_over_previous": self.gain_over_previous,
        }

class _Objective:
    """Counts evaluations of U(T, p); divergent or infeasible policies score -inf."""
    def __init__(self, spec: System_Spec) -> None:
        self.spec = spec
        self.evaluations = 0

    def __call__(self, interval: float, probabilities: np.ndarray) -> float:
        self.evaluations += 1
        if not math.isfinite(interval) or interval <= 0:
            return -math.inf
        try:
            policy = Policy.normalized(interval, probabilities)
            return evaluate(self.spec, policy).utilization
        except (Policy_Diverges_Error, Validation_Error):
            return -math.inf

def _probabilities_from_logits(logits: np.ndarray) -> np.ndarray:
    return softmax(np.append(logits, 0.0))

@dataclass
class _Start_Outcome:
    utilization: float
    interval: float
    probabilities: np.ndarray
    evaluations: int
    converged: bool
    index: int = field(default=0)

    def sort_key(self) -> tuple:
        return (-self.utilization, self.interval, tuple(self.probabilities))

def _starting_points(spec: System_Spec, lo: float, hi: float, config: Optimizer_Config) -> List[np.ndarray]:
    """Start 0 is the Young-style anchor with uniform p; the rest are Latin-hypercube in (log T, logits)."""
    num_levels = spec.num_levels
    mean_cost = float(np.mean(spec.checkpoint_costs))
    total_rate = spec.total_failure_rate
    anchor_interval = mean_cost + math.sqrt(2.0 * mean_cost / total_rate) if total_rate > 0 else math.sqrt(lo * hi)
    anchor_interval = min(max(anchor_interval, lo), hi)
    starts = [np.concatenate(([math.log(anchor_interval)], np.zeros(num_levels - 1)))]

    if config.multistarts > 1:
        sampler = qmc.LatinHypercube(d=num_levels, seed=np.random.default_rng(config.seed))
        samples = sampler.random(config.multistarts - 1)
        span = Settings.optimizer.LHS_LOGIT_SPAN
        for sample in samples:
            log_interval = math.log(lo) + sample[0] * (math.log(hi) - math.log(lo))
            logits = -span + 2.0 * span * sample[1:]
            starts.append(np.concatenate(([log_interval], logits)))
    return starts

def _refine(
    objective: _Objective,
    interval: float,
    probabilities: np.ndarray,
    lo: float,
    hi: float,
    config: Optimizer_Config,
    fix_interval: bool = False,
    fix_probabilities: bool = False,
) -> Tuple[float, np.ndarray, float, bool]:
    """Cyclic coordinate ascent. Each accepted move strictly improves U, so the result never gets worse."""
    num_levels = probabilities.size
    utilization = objective(interval, probabilities)
    converged = False

    for _ in range(Settings.optimizer.MAX_REFINEMENT_CYCLES):
        cycle_start_utilization, cycle_start_interval = utilization, interval

        if not fix_interval:
            t_lo, t_hi = max(lo, interval / 2.0), min(hi, interval * 2.0)
            if t_lo < t_hi:
                p_now = probabilities
                candidate, value = maximize_1d(lambda t: objective(t, p_now), t_lo, t_hi, config.T_tolerance / 10.0)
                if value > utilization:
                    interval, utilization = candidate, value

        if not fix_probabilities and num_levels > 1:
            for i in range(num_levels):
                direction = -np.full(num_levels, 1.0 / num_levels)
                direction[i] += 1.0
                others = np.delete(probabilities, i)
                s_lo = -probabilities[i] * num_levels / (num_levels - 1)
                s_hi = float(np.min(others)) * num_levels
                if s_hi - s_lo <= Settings.optimizer.P_LINE_TOLERANCE:
                    continue
                base, t_now = probabilities, interval
                step, value = maximize_1d(
                    lambda s: objective(t_now, project_to_simplex(base + s * direction)),
                    s_lo,
                    s_hi,
                    Settings.optimizer.P_LINE_TOLERANCE,
                )
                if value > utilization:
                    probabilities, utilization = project_to_simplex(base + step * direction), value

        if (
            math.isfinite(utilization)
            and abs(utilization - cycle_start_utilization) < config.simplex_tolerance
            and abs(interval - cycle_start_interval) < config.T_tolerance
        ):
            converged = True
            break

    return interval, probabilities, utilization, converged

def _run_start(spec: System_Spec, start: np.ndarray, index: int, lo: float, hi: float, config: Optimizer_Config) -> _Start_Outcome:
    objective = _Objective(spec)
    bound = Settings.optimizer.LOGIT_BOUND
    bounds = [(math.log(lo), math.log(hi))] + [(-bound, bound)] * (spec.num_levels - 1)

    def negated(x: np.ndarray) -> float:
        value = objective(math.exp(x[0]), _probabilities_from_logits(x[1:]))
        return -value if math.isfinite(value) else math.inf

    search = minimize(
        negated,
        start,
        method="Nelder-Mead",
        bounds=bounds,
        options={"maxiter": Settings.optimizer.NELDER_MEAD_MAX_ITERATIONS, "xatol": 1e-7, "fatol": config.simplex_tolerance / 10.0},
    )
    interval = min(max(math.exp(search.x[0]), lo), hi)
    probabilities = _probabilities_from_logits(search.x[1:])
    interval, probabilities, utilization, converged = _refine(objective, interval, probabilities, lo, hi, config)
    logger.debug(f"Start {index}: U={utilization!r} T={interval!r} p={probabilities.tolist()} after {objective.evaluations} evaluations")
    return _Start_Outcome(utilization, interval, probabilities, objective.evaluations, converged, index)

def _plateau_width(spec: System_Spec, policy: Policy, utilization: float, lo: float, hi: float) -> float:
    """Width of the T range around T* at fixed p* where U stays within the plateau tolerance of U*."""
    objective = _Objective(spec)
    level = utilization - Settings.optimizer.PLATEAU_TOLERANCE
    p = policy.p

    def excess(t: float) -> float:
        value = objective(t, p)
        return (value if math.isfinite(value) else -1.0) - level

    center = policy.interval
    left = lo if excess(lo) >= 0 else brentq(excess, lo, center)
    right = hi if excess(hi) >= 0 else brentq(excess, center, hi)
    return right - left

def _merge(outcomes: Sequence[_Start_Outcome], spec: System_Spec, lo: float, hi: float) -> Tuple[_Start_Outcome, int]:
    evaluations = sum(outcome.evaluations for outcome in outcomes)
    feasible = [outcome for outcome in outcomes if math.isfinite(outcome.utilization)]
    if not feasible:
        raise Policy_Diverges_Error(f"Every start diverged: no feasible policy found for T in [{lo}, {hi}] over {spec.num_levels} levels")
    return min(feasible, key=_Start_Outcome.sort_key), evaluations

def _finish(spec: System_Spec, best: _Start_Outcome, evaluations: int, restarts: int, lo: float, hi: float) -> Optimization_Result:
    policy = Policy.normalized(best.interval, best.probabilities)
    return Optimization_Result(
        best_policy=policy,
        best_utilization=best.utilization,
        evaluations=evaluations,
        restarts_used=restarts,
        converged=best.converged,
        plateau_width=_plateau_width(spec, policy, best.utilization, lo, hi),
    )

def optimize(spec: System_Spec, config: Optimizer_Config = Optimizer_Config()) -> Optimization_Result:
    """
    Finds (T*, p*) maximizing utilization for any number of levels, with or without topology.

    Args:
        spec (System_Spec): The system.
        config (Optimizer_Config): Bounds, starts, tolerances, seed and worker count.

    Returns:
        Optimization_Result: The best policy over all starts; identical for any worker count.

    Raises:
        Validation_Error: If the bounds are infeasible.
        Policy_Diverges_Error: If every start ends in a divergent or infeasible region.
    """
    if not isinstance(spec, System_Spec):
        raise Validation_Error(f"Invalid type for 'spec': expected 'System_Spec', got {type(spec).__name__}")
    lo, hi = config.resolve_bounds(spec)
    starts = _starting_points(spec, lo, hi, config)
    logger.debug(f"Optimizing {spec.num_levels}-level system over T in [{lo}, {hi}] with {len(starts)} starts")

    def run(indexed: Tuple[int, np.ndarray]) -> _Start_Outcome:
        return _run_start(spec, indexed[1], indexed[0], lo, hi, config)

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(run, enumerate(starts)))
    else:
        outcomes = [run(indexed) for indexed in enumerate(starts)]

    diverged = sum(1 for outcome in outcomes if not math.isfinite(outcome.utilization))
    if diverged:
        logger.warning(f"{diverged} of {len(outcomes)} starts ended in a divergent region")
    best, evaluations = _merge(outcomes, spec, lo, hi)
    result = _finish(spec, best, evaluations, len(starts), lo, hi)
    logger.info(f"Best policy: T={result.best_policy.interval:.6g} p={result.best_policy.probabilities} U={result.best_utilization:.6g}")
    return result

def optimize_fixed_T(spec: System_Spec, interval: float, config: Optimizer_Config = Optimizer_Config()) -> Optimization_Result:
    """
    Best probabilities for a fixed interval: Nelder-Mead over the logits from each start,
    then projected simplex line searches.

    Args:
        spec (System_Spec): The system.
        interval (float): The fixed T in seconds.
        config (Optimizer_Config): Search settings; the interval must lie within its bounds.

    Returns:
        Optimization_Result: With best_policy.interval == interval.
    """
    lo, hi = config.resolve_bounds(spec)
    if not lo <= interval <= hi:
        raise Validation_Error(f"Invalid value for 'interval': expected within [{lo}, {hi}], got {interval}")
    num_levels = spec.num_levels
    starts = [start[1:] for start in _starting_points(spec, lo, hi, config)] if num_levels > 1 else [np.zeros(0)]
    bound = Settings.optimizer.LOGIT_BOUND

    outcomes = []
    for index, logits in enumerate(starts):
        objective = _Objective(spec)
        if num_levels > 1:
            def negated(x: np.ndarray) -> float:
                value = objective(interval, _probabilities_from_logits(x))
                return -value if math.isfinite(value) else math.inf

            search = minimize(
                negated,
                logits,
                method="Nelder-Mead",
                bounds=[(-bound, bound)] * (num_levels - 1),
                options={"maxiter": Settings.optimizer.NELDER_MEAD_MAX_ITERATIONS, "xatol": 1e-7, "fatol": config.simplex_tolerance / 10.0},
            )
            probabilities = _probabilities_from_logits(search.x)
        else:
            probabilities = np.ones(1)
        _, probabilities, utilization, converged = _refine(objective, interval, probabilities, lo, hi, config, fix_interval=True)
        outcomes.append(_Start_Outcome(utilization, interval, probabilities, objective.evaluations, converged, index))

    best, evaluations = _merge(outcomes, spec, lo, hi)
    return _finish(spec, best, evaluations, len(starts), lo, hi)

def optimize_fixed_p(spec: System_Spec, probabilities: Sequence[float], config: Optimizer_Config = Optimizer_Config()) -> Optimization_Result:
    """
    Best interval for fixed probabilities: golden section over log T across the whole
    bound range, polished by a linear search around the result.
    """
    lo, hi = config.resolve_bounds(spec)
    p = Policy(hi, tuple(probabilities)).p
    if p.size != spec.num_levels:
        raise Validation_Error(f"Invalid policy: expected {spec.num_levels} probabilities, got {p.size}")
    objective = _Objective(spec)

    log_interval, _ = maximize_1d(
        lambda x: objective(math.exp(x), p),
        math.log(lo),
        math.log(hi),
        config.T_tolerance / (10.0 * hi),
    )
    interval = min(max(math.exp(log_interval), lo), hi)
    interval, _, utilization, converged = _refine(objective, interval, p, lo, hi, config, fix_probabilities=True)
    best, evaluations = _merge([_Start_Outcome(utilization, interval, p, objective.evaluations, converged)], spec, lo, hi)
    return _finish(spec, best, evaluations, 1, lo, hi)

def retained_levels(num_levels: int, count: int, strategy: str = STRATEGY_TOP) -> Tuple[int, ...]:
    """
    Levels kept when comparing with `count` of `num_levels` levels.

    "top" keeps the highest `count` levels; "anchored" keeps level 1 plus the highest
    `count` - 1 levels, and only the top level when `count` is 1.
    """
    if not 1 <= count <= num_levels:
        raise Validation_Error(f"Invalid level count {count}: expected 1 <= count <= {num_levels}")
    if strategy == STRATEGY_TOP:
        return tuple(range(num_levels - count + 1, num_levels + 1))
    if strategy == STRATEGY_ANCHORED:
        if count == 1:
            return (num_levels,)
        return (1,) + tuple(range(num_levels - count + 2, num_levels + 1))
    raise Validation_Error(f"Invalid strategy: expected '{STRATEGY_TOP}' or '{STRATEGY_ANCHORED}', got {strategy!r}")

def compare_levels(
    spec: System_Spec,
    config: Optimizer_Config = Optimizer_Config(),
    strategy: str = STRATEGY_TOP,
    optimizer: Callable[[System_Spec, Optimizer_Config], Optimization_Result] = optimize,
) -> List[Level_Comparison_Row]:
    """
    Optimizes with 1..L levels and reports each optimum against the single-level one.
    Failure rates of dropped levels are folded into the next retained level above them.

    Args:
        spec (System_Spec): The full system, L >= 2.
        config (Optimizer_Config): Search settings shared by every row.
        strategy (str): "top" or "anchored"; see `retained_levels`.
        optimizer (Callable): The search used per row.

    Returns:
        List[Level_Comparison_Row]: Rows for k = 1..L.
    """
    if spec.num_levels < 2:
        raise Validation_Error(f"Level comparison needs L >= 2, got {spec.num_levels}")

    rows: List[Level_Comparison_Row] = []
    baseline = previous = math.nan
    for count in range(1, spec.num_levels + 1):
        levels = retained_levels(spec.num_levels, count, strategy)
        result = optimizer(spec.fold(levels), config)
        p_star = np.zeros(spec.num_levels)
        p_star[np.array(levels) - 1] = result.best_policy.p
        utilization = result.best_utilization
        if count == 1:
            baseline = previous = utilization
        rows.append(Level_Comparison_Row(
            levels=levels,
            T_star=result.best_policy.interval,
            p_star=tuple(float(p) for p in p_star),
            utilization=utilization,
            pct_increase=100.0 * (utilization / baseline - 1.0),
            gain_over_previous=100.0 * (utilization / previous - 1.0),
        ))
        previous = utilization
        logger.info(f"Levels {levels}: T*={result.best_policy.interval:.6g} U*={utilization:.6g}")
    return rows
