"""
Closed-form utilization model for probabilistic multi-level checkpointing.

Every period of length T ends with exactly one checkpoint whose level is drawn from
p_1..p_L. Failures of level l arrive as a Poisson process with rate lambda_l and are
recovered from the nearest completed checkpoint of level l or higher. All expressions
of the form (1 - q) / q with q = exp(-rate * t) are evaluated as expm1(rate * t).
"""
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors_module import Domain_Error, Policy_Diverges_Error, Validation_Error, Convergence_Error
from .numerics_module import lambert_w0
from .settings_module import Settings

FORMULA_NO_FAILURE = "no_failure"
FORMULA_1LEVEL = "1level"
FORMULA_2LEVEL = "2level"
FORMULA_LLEVEL = "llevel"
FORMULA_2LEVEL_STREAM = "2level_stream"
FORMULA_LLEVEL_STREAM = "llevel_stream"

# Largest x with a finite exp(x).
EXP_OVERFLOW: float = math.log(float(np.finfo(float).max))

def rate_per_second(value: float, unit: str) -> float:
    """
    Converts a failure rate to failures per second.

    Args:
        value (float): The rate in the given unit.
        unit (str): "per_day" or "per_second".

    Returns:
        float: The rate in failures per second.
    """
    if unit == Settings.units.RATE_UNIT_PER_SECOND:
        return float(value)
    if unit == Settings.units.RATE_UNIT_PER_DAY:
        return float(value) / Settings.units.SECONDS_PER_DAY
    raise Validation_Error(f"Invalid rate unit: expected 'per_day' or 'per_second', got {unit!r}")

def per_day(value: float) -> float:
    """Shorthand for a rate given in failures per day."""
    return rate_per_second(value, Settings.units.RATE_UNIT_PER_DAY)

def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise Validation_Error(f"Invalid value for '{name}': expected a finite number, got {value}")
    return value

@dataclass(frozen=True)
class Level_Spec:
    """
    One checkpoint level: how often it fails and what its checkpoints cost.

    Attributes:
        failure_rate (float): lambda_l, failures per second.
        checkpoint_cost (float): c_l, seconds to write a level-l checkpoint.
        restart_cost (float): r_l, seconds to restart from a level-l checkpoint.
    """
    failure_rate: float
    checkpoint_cost: float
    restart_cost: float

    def __post_init__(self) -> None:
        if _require_finite("failure_rate", self.failure_rate) < 0:
            raise Validation_Error(f"Invalid value for 'failure_rate': expected >= 0, got {self.failure_rate}")
        if not _require_finite("checkpoint_cost", self.checkpoint_cost) > 0:
            raise Validation_Error(f"Invalid value for 'checkpoint_cost': expected > 0, got {self.checkpoint_cost}")
        if _require_finite("restart_cost", self.restart_cost) < 0:
            raise Validation_Error(f"Invalid value for 'restart_cost': expected >= 0, got {self.restart_cost}")

@dataclass(frozen=True)
class Topology_Spec:
    """
    Critical path of a stream-processing DAG.

    Attributes:
        critical_path_operators (int): n, operators on the longest source-to-sink path.
        hop_delay (float): delta, seconds for the checkpoint token to reach the next operator.
    """
    critical_path_operators: int
    hop_delay: float

    def __post_init__(self) -> None:
        if isinstance(self.critical_path_operators, bool) or int(self.critical_path_operators) != self.critical_path_operators:
            raise Validation_Error(f"Invalid value for 'critical_path_operators': expected an integer, got {self.critical_path_operators!r}")
        if self.critical_path_operators < 1:
            raise Validation_Error(f"Invalid value for 'critical_path_operators': expected >= 1, got {self.critical_path_operators}")
        if _require_finite("hop_delay", self.hop_delay) < 0:
            raise Validation_Error(f"Invalid value for 'hop_delay': expected >= 0, got {self.hop_delay}")

    @property
    def completion_delay(self) -> float:
        """(n - 1) * delta: time from the first operator's checkpoint to the full DAG checkpoint."""
        return (self.critical_path_operators - 1) * self.hop_delay

@dataclass(frozen=True)
class System_Spec:
    """
    An ordered set of checkpoint levels (level 1 first) and an optional DAG topology.

    Attributes:
        levels (Tuple[Level_Spec, ...]): Levels 1..L.
        topology (Optional[Topology_Spec]): Critical path of a streaming DAG, or None for a single process.
        strict_ordering (bool): Enforce strictly decreasing failure rates and strictly increasing checkpoint costs.
    """
    levels: Tuple[Level_Spec, ...]
    topology: Optional[Topology_Spec] = None
    strict_ordering: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "levels", tuple(self.levels))
        if len(self.levels) < 1:
            raise Validation_Error("Invalid system: expected at least one level")
        for level in self.levels:
            if not isinstance(level, Level_Spec):
                raise Validation_Error(f"Invalid type for 'levels': expected 'Level_Spec', got {type(level).__name__}")
        if self.topology is not None and not isinstance(self.topology, Topology_Spec):
            raise Validation_Error(f"Invalid type for 'topology': expected 'Topology_Spec', got {type(self.topology).__name__}")

        rates = self.failure_rates
        costs = self.checkpoint_costs
        restarts = self.restart_costs
        if np.any(np.diff(restarts) < 0):
            raise Validation_Error(f"Invalid system: restart costs must be non-decreasing with level, got {restarts.tolist()}")
        if self.strict_ordering:
            if np.any(np.diff(rates) >= 0):
                raise Validation_Error(f"Invalid system: failure rates must be strictly decreasing with level, got {rates.tolist()}")
            if np.any(np.diff(costs) <= 0):
                raise Validation_Error(f"Invalid system: checkpoint costs must be strictly increasing with level, got {costs.tolist()}")

    @staticmethod
    def from_arrays(
        failure_rates: Sequence[float],
        checkpoint_costs: Sequence[float],
        restart_costs: Optional[Sequence[float]] = None,
        topology: Optional[Topology_Spec] = None,
        strict_ordering: bool = True,
    ) -> "System_Spec":
        """
        Builds a spec from parallel per-level sequences (rates in failures per second).

        Args:
            failure_rates (Sequence[float]): lambda_1..lambda_L.
            checkpoint_costs (Sequence[float]): c_1..c_L in seconds.
            restart_costs (Optional[Sequence[float]]): r_1..r_L in seconds, defaults to the checkpoint costs.
            topology (Optional[Topology_Spec]): Optional DAG critical path.
            strict_ordering (bool): See `System_Spec`.

        Returns:
            System_Spec: The assembled spec.
        """
        if restart_costs is None:
            restart_costs = checkpoint_costs
        if not len(failure_rates) == len(checkpoint_costs) == len(restart_costs):
            raise Validation_Error("Invalid system: per-level sequences must have equal length")
        levels = tuple(Level_Spec(float(lam), float(c), float(r)) for lam, c, r in zip(failure_rates, checkpoint_costs, restart_costs))
        return System_Spec(levels, topology, strict_ordering)

    @property
    def num_levels(self) -> int:
        return len(self.levels)

    @property
    def failure_rates(self) -> np.ndarray:
        return np.array([level.failure_rate for level in self.levels], dtype=float)

    @property
    def checkpoint_costs(self) -> np.ndarray:
        return np.array([level.checkpoint_cost for level in self.levels], dtype=float)

    @property
    def restart_costs(self) -> np.ndarray:
        return np.array([level.restart_cost for level in self.levels], dtype=float)

    @property
    def total_failure_rate(self) -> float:
        """Lambda = sum of all level failure rates."""
        return float(np.sum(self.failure_rates))

    @property
    def cumulative_failure_rates(self) -> np.ndarray:
        """Lambda_l = sum of lambda_i for i <= l; the rate of failures a level-l restart is exposed to."""
        return np.cumsum(self.failure_rates)

    @property
    def completion_delay(self) -> float:
        return 0.0 if self.topology is None else self.topology.completion_delay

    def with_topology(self, topology: Optional[Topology_Spec]) -> "System_Spec":
        return replace(self, topology=topology)

    def with_failure_rate(self, level: int, rate: float) -> "System_Spec":
        """Returns a copy with level `level` (1-based) failing at `rate` per second; ordering strictness is relaxed."""
        _check_level_index(self, level)
        levels = list(self.levels)
        levels[level - 1] = replace(levels[level - 1], failure_rate=float(rate))
        return System_Spec(tuple(levels), self.topology, strict_ordering=False)

    def fold(self, retained_levels: Sequence[int]) -> "System_Spec":
        """
        Keeps only `retained_levels` (1-based). The failures of a dropped level are
        recovered by the next retained level above it, so its rate is added there.

        Args:
            retained_levels (Sequence[int]): Levels to keep; must include level L.

        Returns:
            System_Spec: The reduced spec, with ordering strictness relaxed.
        """
        retained = sorted(set(int(level) for level in retained_levels))
        if not retained or retained[-1] != self.num_levels:
            raise Validation_Error(f"Invalid level selection {retained}: the top level {self.num_levels} must be retained")
        for level in retained:
            _check_level_index(self, level)

        folded = []
        previous = 0
        for level in retained:
            absorbed = float(np.sum(self.failure_rates[previous:level]))
            folded.append(replace(self.levels[level - 1], failure_rate=absorbed))
            previous = level
        return System_Spec(tuple(folded), self.topology, strict_ordering=False)

def _check_level_index(spec: System_Spec, level: int) -> None:
    if not 1 <= level <= spec.num_levels:
        raise Validation_Error(f"Invalid level {level}: expected 1 <= level <= {spec.num_levels}")

@dataclass(frozen=True)
class Policy:
    """
    A checkpointing policy: one global interval and a level-selection distribution.

    Attributes:
        interval (float): T, seconds between checkpoint instants.
        probabilities (Tuple[float, ...]): p_1..p_L, summing to one.
    """
    interval: float
    probabilities: Tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "probabilities", tuple(float(p) for p in self.probabilities))
        if not _require_finite("interval", self.interval) > 0:
            raise Validation_Error(f"Invalid value for 'interval': expected > 0, got {self.interval}")
        if len(self.probabilities) < 1:
            raise Validation_Error("Invalid policy: expected at least one probability")
        if any(not math.isfinite(p) or p < 0 for p in self.probabilities):
            raise Validation_Error(f"Invalid policy: probabilities must be finite and >= 0, got {self.probabilities}")
        total = math.fsum(self.probabilities)
        if abs(total - 1.0) > Settings.model.PROBABILITY_SUM_TOLERANCE:
            raise Validation_Error(f"Invalid policy: probabilities must sum to 1, got {total!r}")

    @staticmethod
    def two_level(interval: float, p1: float) -> "Policy":
        return Policy(interval, (p1, 1.0 - p1))

    @staticmethod
    def normalized(interval: float, probabilities: Sequence[float]) -> "Policy":
        """Builds a policy after rescaling `probabilities` to sum to one."""
        p = np.maximum(np.asarray(probabilities, dtype=float), 0.0)
        return Policy(interval, tuple(p / p.sum()))

    @property
    def p(self) -> np.ndarray:
        return np.array(self.probabilities, dtype=float)

    def validate_for(self, spec: System_Spec) -> None:
        """
        Checks the policy against a spec: matching level count, positive useful work per
        period and a recoverable checkpoint type for every level that can fail.

        Raises:
            Validation_Error: If any check fails.
        """
        if len(self.probabilities) != spec.num_levels:
            raise Validation_Error(f"Invalid policy: expected {spec.num_levels} probabilities, got {len(self.probabilities)}")
        work = useful_work(spec, self)
        if not work > 0:
            raise Validation_Error(f"Infeasible policy: T - sum(p_l c_l) must be > 0, got {work}")
        tails = np.cumsum(self.p[::-1])[::-1]
        for index, rate in enumerate(spec.failure_rates):
            if rate > 0 and not tails[index] > 0:
                raise Validation_Error(f"Unrecoverable level {index + 1}: it can fail but no checkpoint of level >= {index + 1} is ever taken")

@dataclass(frozen=True)
class Evaluation:
    """
    Result of evaluating a policy against a system.

    Attributes:
        utilization (float): U, fraction of wall-clock time doing useful work that is never rolled back.
        effective_period (float): T_eff, expected wall-clock time per committed period.
        mean_ckpt_cost (float): sum of p_l c_l.
        per_level_recovery_cost (Tuple[float, ...]): R_1..R_L in seconds (inf for levels without a recoverable checkpoint).
        formula (str): Which closed form produced the result.
    """
    utilization: float
    effective_period: float
    mean_ckpt_cost: float
    per_level_recovery_cost: Tuple[float, ...]
    formula: str = FORMULA_LLEVEL

    def to_dict(self) -> dict:
        return {
            "utilization": self.utilization,
            "effective_period": self.effective_period,
            "mean_ckpt_cost": self.mean_ckpt_cost,
            "per_level_recovery_cost": list(self.per_level_recovery_cost),
            "formula": self.formula,
        }

def _guard_exponent(x: float) -> None:
    if x > EXP_OVERFLOW:
        raise Policy_Diverges_Error(f"Policy diverges: exp({x!r}) overflows, so failures outpace every period")

def _exp(x: float) -> float:
    _guard_exponent(x)
    return math.exp(x)

def _expm1(x: float) -> float:
    _guard_exponent(x)
    return math.expm1(x)

def survival_probability(duration: float, rate: float) -> float:
    """
    q = P[X >= duration] for an exponential failure time with the given rate.

    Args:
        duration (float): Horizon in seconds, >= 0.
        rate (float): Failures per second, >= 0.

    Returns:
        float: exp(-rate * duration).
    """
    if duration < 0 or rate < 0:
        raise Validation_Error(f"Invalid survival arguments: expected duration >= 0 and rate >= 0, got {duration}, {rate}")
    return math.exp(-rate * duration)

def mean_consecutive_failures(horizon: float, rate: float) -> float:
    """
    (1 - q) / q: mean number of failures before a failure-free stretch of `horizon`.
    Also equals the expected number of failed restart attempts for a restart of that length.

    Raises:
        Policy_Diverges_Error: If the count overflows a float.
    """
    if horizon < 0 or rate < 0:
        raise Validation_Error(f"Invalid arguments: expected horizon >= 0 and rate >= 0, got {horizon}, {rate}")
    return _expm1(rate * horizon)

def conditional_mttf(horizon: float, rate: float) -> float:
    """
    F_Lambda(T) = E[X | X < T]: mean failure time given that a failure occurs within the horizon.

    Evaluated as T * (1/x - 1/expm1(x)) with x = rate * T, switching to the series
    T * (1/2 - x/12 + x^3/720) for small x where the difference cancels.

    Args:
        horizon (float): T > 0 seconds.
        rate (float): Lambda > 0 failures per second.

    Returns:
        float: The conditional mean, in (0, min(T, 1/Lambda)).

    Raises:
        Validation_Error: If horizon or rate is not strictly positive.
    """
    if not horizon > 0 or not rate > 0:
        raise Validation_Error(f"Conditional MTTF needs horizon > 0 and rate > 0, got {horizon}, {rate}")
    x = rate * horizon
    if x < Settings.numerics.MTTF_SERIES_SWITCH:
        return horizon * (0.5 - x / 12.0 + x ** 3 / 720.0)
    if x > EXP_OVERFLOW:
        return 1.0 / rate
    return 1.0 / rate - horizon / math.expm1(x)

def useful_work(spec: System_Spec, policy: Policy) -> float:
    """T - sum(p_l c_l): useful seconds produced by one committed period."""
    return policy.interval - float(np.dot(policy.p, spec.checkpoint_costs))

def _restart_term(restart_cost: float, exposure_rate: float) -> float:
    # r + (1/q - 1) * F(r); zero restart or zero exposure short-circuits the failure term.
    if restart_cost == 0 or exposure_rate == 0:
        return restart_cost
    return restart_cost + mean_consecutive_failures(restart_cost, exposure_rate) * conditional_mttf(restart_cost, exposure_rate)

def recovery_cost(spec: System_Spec, policy: Policy, failure_level: int) -> float:
    """
    R_l: expected time to recover from a level-l failure, including failed restart attempts.

    The recovery checkpoint is of level i >= l with probability p_i / sum_{j >= l} p_j;
    a restart from level i is exposed to the failures of levels 1..i.

    Args:
        spec (System_Spec): The system.
        policy (Policy): The policy.
        failure_level (int): l, 1-based.

    Returns:
        float: R_l in seconds.

    Raises:
        Validation_Error: If no checkpoint of level >= l is ever taken.
    """
    _check_level_index(spec, failure_level)
    p = policy.p
    start = failure_level - 1
    tail = float(np.sum(p[start:]))
    if not tail > 0:
        raise Validation_Error(f"Unrecoverable level {failure_level}: no checkpoint of level >= {failure_level} is ever taken")
    restarts = spec.restart_costs
    exposure = spec.cumulative_failure_rates
    total = 0.0
    for i in range(start, spec.num_levels):
        if p[i] > 0:
            total += p[i] / tail * _restart_term(float(restarts[i]), float(exposure[i]))
    return total

def recovery_costs(spec: System_Spec, policy: Policy) -> Tuple[float, ...]:
    """R_1..R_L; levels without any recoverable checkpoint report inf."""
    tails = np.cumsum(policy.p[::-1])[::-1]
    return tuple(recovery_cost(spec, policy, level) if tails[level - 1] > 0 else math.inf for level in range(1, spec.num_levels + 1))

def lost_checkpoint_factor(policy: Policy, level: int) -> float:
    """Mean number of completed lower-level checkpoints discarded by a level-l failure: sum_{i<l} p_i / sum_{i>=l} p_i."""
    p = policy.p
    tail = float(np.sum(p[level - 1:]))
    if not tail > 0:
        raise Validation_Error(f"Unrecoverable level {level}: no checkpoint of level >= {level} is ever taken")
    return float(np.sum(p[:level - 1])) / tail

def _failure_mix(spec: System_Spec, policy: Policy) -> Tuple[float, float]:
    """(sum lambda_l R_l / Lambda, sum (lambda_l / Lambda) * lost_l) over levels that can fail."""
    total_rate = spec.total_failure_rate
    weighted_recovery = 0.0
    weighted_lost = 0.0
    for index, rate in enumerate(spec.failure_rates):
        if rate > 0:
            level = index + 1
            weighted_recovery += rate * recovery_cost(spec, policy, level)
            weighted_lost += rate * lost_checkpoint_factor(policy, level)
    return weighted_recovery / total_rate, weighted_lost / total_rate

def _prepare(spec: System_Spec, policy: Policy) -> float:
    if not isinstance(spec, System_Spec):
        raise Validation_Error(f"Invalid type for 'spec': expected 'System_Spec', got {type(spec).__name__}")
    if not isinstance(policy, Policy):
        raise Validation_Error(f"Invalid type for 'policy': expected 'Policy', got {type(policy).__name__}")
    policy.validate_for(spec)
    return useful_work(spec, policy)

def _finish(spec: System_Spec, policy: Policy, work: float, numerator: float, denominator: float, formula: str) -> Evaluation:
    if not denominator > 0 or not math.isfinite(numerator):
        raise Policy_Diverges_Error(
            f"Policy diverges (expected rework exceeds progress) at T={policy.interval!r}, p={policy.probabilities}"
        )
    effective_period = numerator / denominator
    return Evaluation(
        utilization=work / effective_period,
        effective_period=effective_period,
        mean_ckpt_cost=policy.interval - work,
        per_level_recovery_cost=recovery_costs(spec, policy),
        formula=formula,
    )

def utilization_no_failure(spec: System_Spec, policy: Policy) -> Evaluation:
    """
    Expected utilization when nothing ever fails: (T - sum p_l c_l) / (T + (n-1) delta).

    Args:
        spec (System_Spec): The system; failure rates are ignored.
        policy (Policy): A feasible policy.

    Returns:
        Evaluation: With effective period T + (n-1) delta.
    """
    work = _prepare(spec, policy)
    return _finish(spec, policy, work, policy.interval + spec.completion_delay, 1.0, FORMULA_NO_FAILURE)

def evaluate_llevel(spec: System_Spec, policy: Policy) -> Evaluation:
    """
    General L-level utilization for a single process.

    T_eff = (T + A (F_Lambda(T) + sum lambda_l R_l / Lambda)) / (1 - A sum (lambda_l / Lambda) lost_l)
    with A = (1 - q_{T,Lambda}) / q_{T,Lambda}; U = (T - sum p_l c_l) / T_eff.

    Raises:
        Validation_Error: If the policy is infeasible or leaves a failing level unrecoverable.
        Policy_Diverges_Error: If the denominator is not positive.
    """
    work = _prepare(spec, policy)
    total_rate = spec.total_failure_rate
    interval = policy.interval
    if total_rate == 0:
        return _finish(spec, policy, work, interval, 1.0, FORMULA_LLEVEL)

    recovery, lost = _failure_mix(spec, policy)
    a = mean_consecutive_failures(interval, total_rate)
    numerator = interval + a * (conditional_mttf(interval, total_rate) + recovery)
    denominator = 1.0 - a * lost
    return _finish(spec, policy, work, numerator, denominator, FORMULA_LLEVEL)

def evaluate_llevel_stream(spec: System_Spec, policy: Policy, overlap_correction: bool = True) -> Evaluation:
    """
    L-level utilization for a streaming DAG whose checkpoints complete (n-1) delta after
    the first operator finishes.

    With the overlap correction, the effective period of the first (n-1) delta of each
    T' = T + (n-1) delta is subtracted, since failures there are already charged to the
    previous period:

        T_eff = (T + A'(F(T') + S) - B (F(d) + S)) / (1 - (A' - B) K)

    where A' and B are (1 - q)/q at horizons T' and d = (n-1) delta, S = sum lambda_l R_l / Lambda
    and K = sum (lambda_l / Lambda) lost_l. With d = 0 the B terms vanish. Without the
    correction, T_eff = (T' + A'(F(T') + S)) / (1 - A' K).

    Args:
        spec (System_Spec): The system; a missing topology is treated as n = 1.
        policy (Policy): A feasible, recoverable policy.
        overlap_correction (bool): Apply the overlap subtraction.

    Returns:
        Evaluation: The stream evaluation.
    """
    work = _prepare(spec, policy)
    total_rate = spec.total_failure_rate
    interval = policy.interval
    delay = spec.completion_delay
    stretched = interval + delay
    if total_rate == 0:
        baseline = interval if overlap_correction else stretched
        return _finish(spec, policy, work, baseline, 1.0, FORMULA_LLEVEL_STREAM)

    recovery, lost = _failure_mix(spec, policy)
    a_stretched = mean_consecutive_failures(stretched, total_rate)
    stretched_loss = a_stretched * (conditional_mttf(stretched, total_rate) + recovery)
    if not overlap_correction:
        return _finish(spec, policy, work, stretched + stretched_loss, 1.0 - a_stretched * lost, FORMULA_LLEVEL_STREAM)

    if delay > 0:
        a_delay = mean_consecutive_failures(delay, total_rate)
        delay_loss = a_delay * (conditional_mttf(delay, total_rate) + recovery)
    else:
        a_delay = 0.0
        delay_loss = 0.0
    numerator = interval + stretched_loss - delay_loss
    denominator = 1.0 - (a_stretched - a_delay) * lost
    return _finish(spec, policy, work, numerator, denominator, FORMULA_LLEVEL_STREAM)

def _two_level_terms(spec: System_Spec, policy: Policy) -> Tuple[float, float, float, float, float, float]:
    if spec.num_levels != 2:
        raise Validation_Error(f"Two-level closed form needs exactly 2 levels, got {spec.num_levels}")
    p1, p2 = policy.probabilities
    if not p2 > 0:
        raise Validation_Error("Unrecoverable level 2: the two-level closed form needs p_2 > 0")
    lambda1, lambda2 = (float(rate) for rate in spec.failure_rates)
    return lambda1, lambda2, lambda1 + lambda2, p1, p2, float(spec.restart_costs[0])

def _two_level_restart_mix(spec: System_Spec, lambda1: float, lambda2: float, total_rate: float, p1: float, p2: float) -> float:
    # e^{r_2 Lambda}(lambda_2 + lambda_1 p_2) - lambda_2 p_1 + Lambda p_1 e^{lambda_1 r_1}
    r1, r2 = (float(r) for r in spec.restart_costs)
    return _exp(r2 * total_rate) * (lambda2 + lambda1 * p2) - lambda2 * p1 + total_rate * p1 * _exp(lambda1 * r1)

def evaluate_2level(spec: System_Spec, policy: Policy) -> Evaluation:
    """
    Two-level single-process utilization in closed form:

        U = Lambda (lambda_2 (p_1 e^{T Lambda} - 1) - lambda_1 p_2) (T - p_1 c_1 - p_2 c_2)
            / ((1 - e^{T Lambda}) p_2 (e^{r_2 Lambda}(lambda_2 + lambda_1 p_2) - lambda_2 p_1 + Lambda p_1 e^{lambda_1 r_1}))

    evaluated as Lambda (Lambda p_2 - lambda_2 p_1 A) W / (A p_2 M) with A = expm1(T Lambda),
    which is the same expression with both signs flipped.

    Raises:
        Validation_Error: If L != 2, p_2 = 0 or the policy is infeasible.
        Policy_Diverges_Error: If Lambda p_2 - lambda_2 p_1 A <= 0.
    """
    work = _prepare(spec, policy)
    lambda1, lambda2, total_rate, p1, p2, _ = _two_level_terms(spec, policy)
    if total_rate == 0:
        return _finish(spec, policy, work, policy.interval, 1.0, FORMULA_2LEVEL)
    a = _expm1(policy.interval * total_rate)
    progress = total_rate * p2 - lambda2 * p1 * a
    mix = _two_level_restart_mix(spec, lambda1, lambda2, total_rate, p1, p2)
    # T_eff = A p_2 M / (Lambda (Lambda p_2 - lambda_2 p_1 A))
    return _finish(spec, policy, work, a * p2 * mix, total_rate * progress, FORMULA_2LEVEL)

def evaluate_2level_stream(spec: System_Spec, policy: Policy) -> Evaluation:
    """
    Two-level streaming utilization in closed form with the overlap correction:

        U = e^{-delta Lambda (n-1)} Lambda W (Lambda - lambda_1 p_1 - lambda_2 p_1 (e^{Lambda(T + d)} - e^{delta Lambda (n-1)} + 1))
            / (p_2 (e^{T Lambda} - 1) M)

    with d = (n-1) delta. The bracket is evaluated as Lambda p_2 - lambda_2 p_1 e^{Lambda d} expm1(T Lambda).
    """
    work = _prepare(spec, policy)
    lambda1, lambda2, total_rate, p1, p2, _ = _two_level_terms(spec, policy)
    if total_rate == 0:
        return _finish(spec, policy, work, policy.interval, 1.0, FORMULA_2LEVEL_STREAM)
    growth = _exp(total_rate * spec.completion_delay)
    a = _expm1(policy.interval * total_rate)
    progress = total_rate * p2 - lambda2 * p1 * growth * a
    mix = _two_level_restart_mix(spec, lambda1, lambda2, total_rate, p1, p2)
    return _finish(spec, policy, work, growth * a * p2 * mix, total_rate * progress, FORMULA_2LEVEL_STREAM)

def evaluate_1level(level: Level_Spec, interval: float) -> Evaluation:
    """
    Single-level utilization: the L-level model with one level checkpointed every period.

    Args:
        level (Level_Spec): The only level; its failure rate should already include every failure type.
        interval (float): T, which must exceed the checkpoint cost.

    Returns:
        Evaluation: The evaluation.
    """
    if not interval > level.checkpoint_cost:
        raise Validation_Error(f"Infeasible interval: expected T > c = {level.checkpoint_cost}, got {interval}")
    spec = System_Spec((level,))
    evaluation = evaluate_llevel(spec, Policy(interval, (1.0,)))
    return replace(evaluation, formula=FORMULA_1LEVEL)

def evaluate(spec: System_Spec, policy: Policy) -> Evaluation:
    """
    Picks the closed form matching the spec: stream variants when a topology is present,
    the two-level closed forms when L = 2 and p_2 > 0, the L-level forms otherwise.
    """
    streaming = spec.topology is not None
    if spec.num_levels == 2 and len(policy.probabilities) == 2 and policy.probabilities[1] > 0:
        return evaluate_2level_stream(spec, policy) if streaming else evaluate_2level(spec, policy)
    if spec.num_levels == 1 and not streaming:
        return evaluate_1level(spec.levels[0], policy.interval)
    return evaluate_llevel_stream(spec, policy) if streaming else evaluate_llevel(spec, policy)

def _two_level_approximation_inputs(spec: System_Spec) -> Tuple[float, float, float, float]:
    if spec.num_levels != 2:
        raise Validation_Error(f"Approximations are defined for 2 levels, got {spec.num_levels}")
    lambda1, lambda2 = (float(rate) for rate in spec.failure_rates)
    c1, c2 = (float(c) for c in spec.checkpoint_costs)
    return lambda1, lambda2, c1, c2

def approx_optimal_interval(spec: System_Spec, p1: float) -> float:
    """
    Lambert-W approximation of T* for a given p_1, valid when lambda_1 >> lambda_2 and
    restart costs are small. Identical for single-process and streaming systems:

        T* ~ c_1 p_1 + c_2 (1 - p_1) + (W(-e^{c_2 lambda_1 p_1 - c_1 lambda_1 p_1 - c_2 lambda_1 - 1}) + 1) / lambda_1

    Raises:
        Domain_Error: If lambda_1 = 0 or the Lambert-W argument falls below -1/e.
    """
    lambda1, _, c1, c2 = _two_level_approximation_inputs(spec)
    if not lambda1 > 0:
        raise Domain_Error("Interval approximation needs lambda_1 > 0")
    exponent = c2 * lambda1 * p1 - c1 * lambda1 * p1 - c2 * lambda1 - 1.0
    w = lambert_w0(-math.exp(exponent))
    return c1 * p1 + c2 * (1.0 - p1) + (w + 1.0) / lambda1

def approx_optimal_p1(spec: System_Spec, interval: float) -> float:
    """
    Approximation of p_1* for a given T. Single process:

        p_1* ~ 1 - sqrt(lambda_2 (T - c_1)(e^{T Lambda} - 1) / ((c_2 - c_1)(lambda_1 + lambda_2 e^{T Lambda})))

    With a topology, the e^{delta n Lambda / 2} prefactor and the n, delta dependent
    denominator (Lambda e^{delta Lambda} - lambda_2 e^{delta n Lambda} + lambda_2 e^{Lambda (T + delta n)}) are used.
    The value is returned as printed, so it may leave [0, 1] far from the intended regime.

    Raises:
        Domain_Error: If T < c_1, Lambda T overflows or the square root argument is negative.
    """
    lambda1, lambda2, c1, c2 = _two_level_approximation_inputs(spec)
    if interval < c1:
        raise Domain_Error(f"p_1 approximation needs T >= c_1 = {c1}, got {interval}")
    total_rate = lambda1 + lambda2
    hops = spec.topology.critical_path_operators * spec.topology.hop_delay if spec.topology is not None else 0.0
    if total_rate * (interval + hops) > EXP_OVERFLOW:
        raise Domain_Error(f"p_1 approximation overflows at T={interval}: Lambda T is far outside its range")
    growth = math.expm1(interval * total_rate)
    numerator = lambda2 * (interval - c1) * growth
    if spec.topology is None:
        denominator = (c2 - c1) * (lambda1 + lambda2 * math.exp(interval * total_rate))
        prefactor = 1.0
    else:
        n = spec.topology.critical_path_operators
        delta = spec.topology.hop_delay
        denominator = (c2 - c1) * (
            total_rate * math.exp(delta * total_rate)
            - lambda2 * math.exp(delta * n * total_rate)
            + lambda2 * math.exp(total_rate * (interval + delta * n))
        )
        prefactor = math.exp(delta * n * total_rate / 2.0)
    if numerator == 0:
        return 1.0
    ratio = numerator / denominator
    if ratio < 0:
        raise Domain_Error(f"p_1 approximation has a negative square-root argument at T={interval}")
    return 1.0 - prefactor * math.sqrt(ratio)

def approx_fixed_point(
    spec: System_Spec,
    p1_start: float = Settings.model.FIXED_POINT_START_P1,
    max_iterations: int = Settings.model.FIXED_POINT_MAX_ITERATIONS,
    tolerance: float = Settings.model.FIXED_POINT_TOLERANCE,
) -> Tuple[float, float]:
    """
    Alternates the T* and p_1* approximations until they agree, clamping p_1 to [0, 1].

    Returns:
        Tuple[float, float]: (T, p_1) at the fixed point.

    Raises:
        Convergence_Error: If the iteration does not settle within `max_iterations`.
    """
    p1 = min(max(p1_start, 0.0), 1.0)
    interval = approx_optimal_interval(spec, p1)
    for _ in range(max_iterations):
        next_p1 = min(max(approx_optimal_p1(spec, interval), 0.0), 1.0)
        next_interval = approx_optimal_interval(spec, next_p1)
        if abs(next_interval - interval) <= tolerance * interval and abs(next_p1 - p1) <= tolerance:
            return next_interval, next_p1
        interval, p1 = next_interval, next_p1
    raise Convergence_Error(f"Approximation fixed point did not converge after {max_iterations} iterations")
