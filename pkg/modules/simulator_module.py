"""
Discrete-event simulation of probabilistic multi-level checkpoint/restart.

Each replica replays periods of length T whose last c_j seconds write a level-j checkpoint.
Per-level failures are independent Poisson processes merged through a heap. A level-l
failure rolls back to the newest completed checkpoint of level >= l, discarding every
completed lower-level checkpoint after it, and then restarts from that checkpoint.
"""
import hashlib
import heapq
import json
import logging
import math
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from .errors_module import Validation_Error
from .model_module import Policy, System_Spec, Topology_Spec
from .settings_module import Settings

logger = logging.getLogger(__name__)

PHASE_WORK = "work"
PHASE_WRITE = "write"
PHASE_RESTART = "restart"

GENESIS_PERIOD = -1

EVENT_PERIOD_START = "period_start"
EVENT_CHECKPOINT_START = "checkpoint_start"
EVENT_CHECKPOINT_FIRST_DONE = "checkpoint_first_done"
EVENT_CHECKPOINT_COMPLETE = "checkpoint_complete"
EVENT_CHECKPOINT_DISCARDED = "checkpoint_discarded"
EVENT_FAILURE = "failure"
EVENT_ROLLBACK = "rollback"
EVENT_RESTART_START = "restart_start"
EVENT_RESTART_FAILED = "restart_failed"
EVENT_RESTART_DONE = "restart_done"
EVENT_RUN_END = "run_end"

AXIS_INTERVAL = "T"
AXIS_OPERATORS = "n"
AXIS_PROBABILITY_PREFIX = "p"
AXIS_RATE_PREFIX = "lambda"

def normalize_scope(scope: str) -> str:
    """Maps a restart-failure scope, or one of its aliases, to its canonical name."""
    if not isinstance(scope, str):
        raise Validation_Error(f"Invalid type for 'restart_failure_scope': expected 'str', got {type(scope).__name__}")
    scope = Settings.simulation.SCOPE_ALIASES.get(scope, scope)
    scopes = (Settings.simulation.SCOPE_LOWER_LEVELS, Settings.simulation.SCOPE_ALL_LEVELS)
    if scope not in scopes:
        aliases = tuple(Settings.simulation.SCOPE_ALIASES)
        raise Validation_Error(f"Invalid value for 'restart_failure_scope': expected one of {scopes + aliases}, got {scope!r}")
    return scope

@dataclass(frozen=True)
class Simulation_Config:
    """
    Attributes:
        spec (System_Spec): The simulated system.
        policy (Policy): The policy being replayed.
        duration (Optional[float]): Seconds per replica; None means 1000 / lambda_L (the smallest positive rate), or 1000 periods without failures.
        replicas (int): Independent runs.
        seed (int): Root seed; replica streams are spawned from it.
        restart_failure_scope (str): "lower_levels" (alias "paper_assumption") lets only levels <= i fail a restart from level i; "all_levels" lets every level fail it.
        level_sequence (Optional[Tuple[int, ...]]): Cyclic deterministic level sequence replacing the random draw.
        workers (int): Processes used to run replicas.
        record_events (bool): Keep the per-event log in the report.
        progress (bool): Show a progress bar over replicas.
    """
    spec: System_Spec
    policy: Policy
    duration: Optional[float] = None
    replicas: int = Settings.simulation.REPLICAS
    seed: int = Settings.simulation.SEED
    restart_failure_scope: str = Settings.simulation.SCOPE_LOWER_LEVELS
    level_sequence: Optional[Tuple[int, ...]] = None
    workers: int = Settings.simulation.WORKERS
    record_events: bool = False
    progress: bool = False

    def __post_init__(self) -> None:
        if not isinstance(self.spec, System_Spec):
            raise Validation_Error(f"Invalid type for 'spec': expected 'System_Spec', got {type(self.spec).__name__}")
        if not isinstance(self.policy, Policy):
            raise Validation_Error(f"Invalid type for 'policy': expected 'Policy', got {type(self.policy).__name__}")
        self.policy.validate_for(self.spec)
        if self.replicas < 1:
            raise Validation_Error(f"Invalid value for 'replicas': expected >= 1, got {self.replicas}")
        if self.workers < 1:
            raise Validation_Error(f"Invalid value for 'workers': expected >= 1, got {self.workers}")
        object.__setattr__(self, "restart_failure_scope", normalize_scope(self.restart_failure_scope))

        if self.level_sequence is not None:
            sequence = tuple(int(level) for level in self.level_sequence)
            if not sequence or any(not 1 <= level <= self.spec.num_levels for level in sequence):
                raise Validation_Error(f"Invalid level sequence: expected levels within 1..{self.spec.num_levels}, got {sequence}")
            object.__setattr__(self, "level_sequence", sequence)
            used = set(sequence)
        else:
            used = {index + 1 for index, p in enumerate(self.policy.probabilities) if p > 0}
        for level in used:
            cost = self.spec.levels[level - 1].checkpoint_cost
            if not self.policy.interval > cost:
                raise Validation_Error(f"Infeasible period: T={self.policy.interval} must exceed c_{level}={cost} for every level the policy writes")

        duration = self.resolved_duration
        minimum = Settings.simulation.MIN_PERIODS * self.policy.interval
        if not duration > minimum:
            raise Validation_Error(f"Invalid value for 'duration': expected > 10 T = {minimum}, got {duration}")

    @property
    def resolved_duration(self) -> float:
        if self.duration is not None:
            return float(self.duration)
        rates = self.spec.failure_rates
        positive = rates[rates > 0]
        if positive.size == 0:
            return Settings.simulation.NO_FAILURE_DURATION_PERIODS * self.policy.interval
        return Settings.simulation.DURATION_FAILURE_MULTIPLE / float(np.min(positive))

@dataclass(frozen=True)
class Time_Breakdown:
    """Where a replica's wall-clock time went, in seconds."""
    committed: float
    checkpoint: float
    lost: float
    restart: float
    duration: float

    @property
    def residual(self) -> float:
        return self.committed + self.checkpoint + self.lost + self.restart - self.duration

    def to_dict(self) -> dict:
        return {"committed": self.committed, "checkpoint": self.checkpoint, "lost": self.lost, "restart": self.restart, "duration": self.duration}

@dataclass
class Event_Counts:
    """
    Attributes:
        failures (List[int]): Failures acted on, per level.
        failures_ignored (int): Failures of levels above the restart level that struck a restart under "lower_levels".
        checkpoints_completed (List[int]): Fully completed checkpoints, per level.
        checkpoints_discarded (int): Checkpoints written but dropped by a failure inside the completion window.
        checkpoints_interrupted (int): Checkpoint writes cut short by a failure.
        restart_attempts (int): Restarts begun, failed ones included.
    """
    failures: List[int]
    checkpoints_completed: List[int]
    failures_ignored: int = 0
    checkpoints_discarded: int = 0
    checkpoints_interrupted: int = 0
    restart_attempts: int = 0

    @staticmethod
    def empty(num_levels: int) -> "Event_Counts":
        return Event_Counts([0] * num_levels, [0] * num_levels)

    def merge(self, other: "Event_Counts") -> "Event_Counts":
        return Event_Counts(
            failures=[a + b for a, b in zip(self.failures, other.failures)],
            checkpoints_completed=[a + b for a, b in zip(self.checkpoints_completed, other.checkpoints_completed)],
            failures_ignored=self.failures_ignored + other.failures_ignored,
            checkpoints_discarded=self.checkpoints_discarded + other.checkpoints_discarded,
            checkpoints_interrupted=self.checkpoints_interrupted + other.checkpoints_interrupted,
            restart_attempts=self.restart_attempts + other.restart_attempts,
        )

    def to_dict(self) -> dict:
        return {
            "failures": list(self.failures),
            "failures_ignored": self.failures_ignored,
            "checkpoints_completed": list(self.checkpoints_completed),
            "checkpoints_discarded": self.checkpoints_discarded,
            "checkpoints_interrupted": self.checkpoints_interrupted,
            "restart_attempts": self.restart_attempts,
        }

@dataclass(frozen=True)
class Replica_Outcome:
    utilization: float
    breakdown: Time_Breakdown
    counts: Event_Counts
    events: Optional[Tuple[Dict[str, Any], ...]] = None

@dataclass(frozen=True)
class Simulation_Report:
    """
    Aggregate of all replicas of one configuration.

    Attributes:
        per_replica_utilization (Tuple[float, ...]): Utilization of each replica, in replica order.
        mean (float): Mean utilization.
        std_dev (float): Sample standard deviation across replicas (0 for a single replica).
        stderr (float): std_dev / sqrt(replicas).
        event_counts (Event_Counts): Counts summed over replicas.
        breakdowns (Tuple[Time_Breakdown, ...]): Per-replica time breakdown.
        events (Optional[Tuple[dict, ...]]): Event log of every replica when recorded.
    """
    per_replica_utilization: Tuple[float, ...]
    mean: float
    std_dev: float
    stderr: float
    event_counts: Event_Counts
    breakdowns: Tuple[Time_Breakdown, ...]
    events: Optional[Tuple[Dict[str, Any], ...]] = None

    @staticmethod
    def from_outcomes(outcomes: Sequence[Replica_Outcome], num_levels: int) -> "Simulation_Report":
        utilizations = np.array([outcome.utilization for outcome in outcomes], dtype=float)
        std_dev = float(np.std(utilizations, ddof=1)) if utilizations.size > 1 else 0.0
        counts = Event_Counts.empty(num_levels)
        for outcome in outcomes:
            counts = counts.merge(outcome.counts)
        events = None
        if all(outcome.events is not None for outcome in outcomes):
            events = tuple(record for outcome in outcomes for record in outcome.events)
        return Simulation_Report(
            per_replica_utilization=tuple(float(u) for u in utilizations),
            mean=float(np.mean(utilizations)),
            std_dev=std_dev,
            stderr=std_dev / math.sqrt(utilizations.size),
            event_counts=counts,
            breakdowns=tuple(outcome.breakdown for outcome in outcomes),
            events=events,
        )

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "std_dev": self.std_dev,
            "stderr": self.stderr,
            "replicas": len(self.per_replica_utilization),
            "per_replica_utilization": list(self.per_replica_utilization),
            "event_counts": self.event_counts.to_dict(),
        }

@dataclass(frozen=True)
class _Checkpoint:
    level: int
    progress: float
    period: int

class Replica_Engine:
    """
    Replays one replica. Completed checkpoints are kept as a stack whose levels strictly
    decrease from bottom to top, so the recovery checkpoint for a level-l failure is the
    top once every entry below level l has been popped. The bottom entry is a level-L
    genesis checkpoint holding zero progress.

    Attributes:
        spec (System_Spec): The system.
        policy (Policy): The policy.
        duration (float): Run length in seconds.
        scope (str): Restart failure scope.
        replica (int): Replica index written to event records.
    """
    def __init__(
        self,
        spec: System_Spec,
        policy: Policy,
        duration: float,
        scope: str,
        seed_sequence: np.random.SeedSequence,
        replica: int = 0,
        level_sequence: Optional[Tuple[int, ...]] = None,
        record_events: bool = False,
    ) -> None:
        self.spec = spec
        self.policy = policy
        self.duration = duration
        self.scope = scope
        self.replica = replica
        self.level_sequence = level_sequence
        self.events: Optional[List[Dict[str, Any]]] = [] if record_events else None

        streams = seed_sequence.spawn(1 + spec.num_levels)
        self.level_rng = np.random.default_rng(streams[0])
        self.failure_rngs = [np.random.default_rng(stream) for stream in streams[1:]]

        self.rates = spec.failure_rates
        self.costs = spec.checkpoint_costs
        self.restarts = spec.restart_costs
        self.delay = spec.completion_delay
        self.counts = Event_Counts.empty(spec.num_levels)

        self._level_block = np.zeros(0, dtype=int)
        self._level_index = 0

    def _log(self, time: float, kind: str, level: Optional[int], period: int, **fields: Any) -> None:
        if self.events is not None:
            record = {"replica": self.replica, "time": time, "kind": kind, "level": level, "period": period}
            record.update(fields)
            self.events.append(record)

    def _next_level(self) -> int:
        if self.level_sequence is not None:
            level = self.level_sequence[self._level_index % len(self.level_sequence)]
            self._level_index += 1
            return level
        if self._level_index >= self._level_block.size:
            block = Settings.simulation.LEVEL_DRAW_BLOCK
            self._level_block = self.level_rng.choice(self.spec.num_levels, size=block, p=self.policy.p) + 1
            self._level_index = 0
        level = int(self._level_block[self._level_index])
        self._level_index += 1
        return level

    def _draw_failure(self, now: float, level: int) -> Tuple[float, int]:
        rate = self.rates[level - 1]
        return now + self.failure_rngs[level - 1].exponential(1.0 / rate), level

    def _begin_period(self, now: float) -> None:
        self.period += 1
        self.level = self._next_level()
        self.phase = PHASE_WORK
        self.phase_start = now
        self.period_end = now + self.policy.interval
        self.phase_end = self.period_end - self.costs[self.level - 1]
        self._log(now, EVENT_PERIOD_START, self.level, self.period)

    def _complete(self, checkpoint: _Checkpoint, now: float) -> None:
        while self.stack[-1].level <= checkpoint.level:
            self.stack.pop()
            if not self.stack:
                break
        self.stack.append(checkpoint)
        self.counts.checkpoints_completed[checkpoint.level - 1] += 1
        self._log(now, EVENT_CHECKPOINT_COMPLETE, checkpoint.level, checkpoint.period, progress=checkpoint.progress)

    def _advance(self) -> None:
        now = self.phase_end
        if self.phase == PHASE_WORK:
            self.progress += now - self.phase_start
            self.phase = PHASE_WRITE
            self.phase_start = now
            self.phase_end = self.period_end
            self._log(now, EVENT_CHECKPOINT_START, self.level, self.period)
        elif self.phase == PHASE_WRITE:
            self.checkpoint_time += now - self.phase_start
            self._log(now, EVENT_CHECKPOINT_FIRST_DONE, self.level, self.period)
            checkpoint = _Checkpoint(self.level, self.progress, self.period)
            if self.delay > 0:
                self.pending.append((now + self.delay, checkpoint))
            else:
                self._complete(checkpoint, now)
            self._begin_period(now)
        else:
            self.restart_time += now - self.phase_start
            self._log(now, EVENT_RESTART_DONE, self.restart_level, self.period)
            self._begin_period(now)

    def _fail(self, now: float, level: int) -> None:
        heapq.heappush(self.failures, self._draw_failure(now, level))
        if self.phase == PHASE_RESTART and self.scope == Settings.simulation.SCOPE_LOWER_LEVELS and level > self.restart_level:
            self.counts.failures_ignored += 1
            return

        self.counts.failures[level - 1] += 1
        self._log(now, EVENT_FAILURE, level, self.period)
        elapsed = now - self.phase_start
        if self.phase == PHASE_WORK:
            self.progress += elapsed
        elif self.phase == PHASE_WRITE:
            self.checkpoint_time += elapsed
            self.counts.checkpoints_interrupted += 1
        else:
            self.restart_time += elapsed
            self._log(now, EVENT_RESTART_FAILED, self.restart_level, self.period)

        for _, checkpoint in self.pending:
            self.counts.checkpoints_discarded += 1
            self._log(now, EVENT_CHECKPOINT_DISCARDED, checkpoint.level, checkpoint.period)
        self.pending.clear()

        while self.stack[-1].level < level:
            self.stack.pop()
        recovery = self.stack[-1]
        lost = self.progress - recovery.progress
        self.lost_time += lost
        self.progress = recovery.progress
        self._log(now, EVENT_ROLLBACK, recovery.level, recovery.period, failure_level=level, lost=lost, progress=recovery.progress)

        self.phase = PHASE_RESTART
        self.restart_level = recovery.level
        self.phase_start = now
        self.phase_end = now + self.restarts[recovery.level - 1]
        self.counts.restart_attempts += 1
        self._log(now, EVENT_RESTART_START, recovery.level, self.period)

    def _close(self) -> None:
        now = self.duration
        elapsed = now - self.phase_start
        if self.phase == PHASE_WORK:
            self.progress += elapsed
        elif self.phase == PHASE_WRITE:
            self.checkpoint_time += elapsed
        else:
            self.restart_time += elapsed
        self._log(
            now, EVENT_RUN_END, None, self.period,
            progress=self.progress, checkpoint=self.checkpoint_time, lost=self.lost_time, restart=self.restart_time,
        )

    def run(self) -> Replica_Outcome:
        """
        Runs the replica to its duration.

        Returns:
            Replica_Outcome: Utilization (final progress over duration), time breakdown, counts and optional log.
        """
        num_levels = self.spec.num_levels
        self.stack: List[_Checkpoint] = [_Checkpoint(num_levels, 0.0, GENESIS_PERIOD)]
        self.pending: deque = deque()
        self.failures: List[Tuple[float, int]] = [self._draw_failure(0.0, level) for level in range(1, num_levels + 1) if self.rates[level - 1] > 0]
        heapq.heapify(self.failures)
        self.progress = 0.0
        self.checkpoint_time = 0.0
        self.lost_time = 0.0
        self.restart_time = 0.0
        self.restart_level = num_levels
        self.period = -1
        self._begin_period(0.0)

        while True:
            failure_time = self.failures[0][0] if self.failures else math.inf
            completion_time = self.pending[0][0] if self.pending else math.inf
            next_time = min(self.phase_end, failure_time, completion_time)
            if next_time >= self.duration:
                self._close()
                break
            if completion_time == next_time:
                self._complete(self.pending.popleft()[1], completion_time)
            elif self.phase_end == next_time:
                self._advance()
            else:
                self._fail(*heapq.heappop(self.failures))

        breakdown = Time_Breakdown(self.progress, self.checkpoint_time, self.lost_time, self.restart_time, self.duration)
        events = tuple(self.events) if self.events is not None else None
        return Replica_Outcome(self.progress / self.duration, breakdown, self.counts, events)

def _run_replica(arguments: Tuple[Simulation_Config, float, np.random.SeedSequence, int]) -> Replica_Outcome:
    config, duration, seed_sequence, replica = arguments
    engine = Replica_Engine(
        config.spec,
        config.policy,
        duration,
        config.restart_failure_scope,
        seed_sequence,
        replica,
        config.level_sequence,
        config.record_events,
    )
    return engine.run()

def _simulate(config: Simulation_Config, root: np.random.SeedSequence) -> Simulation_Report:
    duration = config.resolved_duration
    arguments = [(config, duration, child, index) for index, child in enumerate(root.spawn(config.replicas))]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            iterator = pool.map(_run_replica, arguments)
            outcomes = list(tqdm(iterator, total=config.replicas, desc="replicas", disable=not config.progress))
    else:
        outcomes = [_run_replica(argument) for argument in tqdm(arguments, desc="replicas", disable=not config.progress)]
    report = Simulation_Report.from_outcomes(outcomes, config.spec.num_levels)
    logger.info(
        f"Simulated {config.replicas} replicas of {duration:.6g} s: mean U={report.mean:.6g} sd={report.std_dev:.3g} "
        f"failures={report.event_counts.failures}"
    )
    return report

def simulate(config: Simulation_Config) -> Simulation_Report:
    """
    Runs every replica of `config` and aggregates the result.

    Replica i draws from the i-th stream spawned off `SeedSequence(config.seed)`, so the
    report does not depend on the worker count or execution order.

    Args:
        config (Simulation_Config): A validated configuration.

    Returns:
        Simulation_Report: Per-replica and aggregate utilization.
    """
    return _simulate(config, np.random.SeedSequence(config.seed))

def _axis_key(axis: str, value: float) -> int:
    digest = hashlib.sha256(f"{axis}={float(value)!r}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")

def _parse_level_axis(axis: str, prefix: str, num_levels: int) -> Optional[int]:
    if not axis.startswith(prefix) or not axis[len(prefix):].isdigit():
        return None
    level = int(axis[len(prefix):])
    if not 1 <= level <= num_levels:
        raise Validation_Error(f"Invalid sweep axis {axis!r}: level must be within 1..{num_levels}")
    return level

def _reweighted(policy: Policy, level: int, value: float) -> Policy:
    if not 0.0 <= value <= 1.0:
        raise Validation_Error(f"Invalid value for 'p{level}': expected within [0, 1], got {value}")
    p = policy.p
    others = np.delete(p, level - 1)
    remaining = float(others.sum())
    if value < 1.0 and remaining <= 0:
        raise Validation_Error(f"Cannot sweep p{level}: the other probabilities are all zero")
    scaled = others * ((1.0 - value) / remaining) if remaining > 0 else others
    return Policy(policy.interval, tuple(np.insert(scaled, level - 1, value)))

def apply_axis(spec: System_Spec, policy: Policy, axis: str, value: float) -> Tuple[System_Spec, Policy]:
    """
    Returns (spec, policy) with one parameter replaced.

    Axes: "T" (seconds), "n" (critical path operators), "p<l>" (the other probabilities
    are rescaled proportionally) and "lambda<l>" (failures per second).
    """
    if axis == AXIS_INTERVAL:
        return spec, Policy(float(value), policy.probabilities)
    if axis == AXIS_OPERATORS:
        if float(value) != int(value):
            raise Validation_Error(f"Invalid value for 'n': expected an integer, got {value}")
        hop_delay = spec.topology.hop_delay if spec.topology is not None else 0.0
        return spec.with_topology(Topology_Spec(int(value), hop_delay)), policy
    level = _parse_level_axis(axis, AXIS_RATE_PREFIX, spec.num_levels)
    if level is not None:
        return spec.with_failure_rate(level, float(value)), policy
    level = _parse_level_axis(axis, AXIS_PROBABILITY_PREFIX, spec.num_levels)
    if level is not None:
        return spec, _reweighted(policy, level, float(value))
    raise Validation_Error(f"Invalid sweep axis {axis!r}: expected 'T', 'n', 'p<level>' or 'lambda<level>'")

def simulate_sweep(config: Simulation_Config, axis: str, values: Iterable[float]) -> List[Simulation_Report]:
    """
    Simulates `config` once per axis value.

    Point k seeds its replicas from `SeedSequence(config.seed, spawn_key=(hash(axis, value), k))`,
    so each point is reproducible on its own and independent of the others.

    Args:
        config (Simulation_Config): Base configuration.
        axis (str): See `apply_axis`.
        values (Iterable[float]): Axis values.

    Returns:
        List[Simulation_Report]: One report per value, in order.
    """
    reports = []
    for index, value in enumerate(values):
        spec, policy = apply_axis(config.spec, config.policy, axis, value)
        point = replace(config, spec=spec, policy=policy)
        root = np.random.SeedSequence(config.seed, spawn_key=(_axis_key(axis, value), index))
        logger.debug(f"Sweep point {axis}={value}")
        reports.append(_simulate(point, root))
    return reports

@dataclass
class Audit_Report:
    """Outcome of an event-log audit; `violations` is empty when every check holds."""
    replicas: int = 0
    failures_checked: int = 0
    violations: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

class _Replica_Audit:
    def __init__(self, replica: int, num_levels: int, tolerance: float, report: Audit_Report) -> None:
        self.replica = replica
        self.tolerance = tolerance
        self.report = report
        self.valid: List[Tuple[int, int]] = [(GENESIS_PERIOD, num_levels)]
        self.write_start: Optional[float] = None
        self.restart_start: Optional[float] = None
        self.checkpoint_time = 0.0
        self.restart_time = 0.0
        self.lost_time = 0.0
        self.failure_level: Optional[int] = None

    def _violation(self, time: float, message: str) -> None:
        self.report.violations.append(f"replica {self.replica} at t={time!r}: {message}")

    def _close_write(self, time: float) -> None:
        if self.write_start is not None:
            self.checkpoint_time += time - self.write_start
            self.write_start = None

    def _close_restart(self, time: float) -> None:
        if self.restart_start is not None:
            self.restart_time += time - self.restart_start
            self.restart_start = None

    def _rollback(self, record: Dict[str, Any]) -> None:
        time = record["time"]
        failure_level = record.get("failure_level", self.failure_level)
        self.report.failures_checked += 1
        position = next((i for i in range(len(self.valid) - 1, -1, -1) if self.valid[i][0] == record["period"]), None)
        if position is None:
            self._violation(time, f"recovered from period {record['period']}, which holds no completed checkpoint")
            return
        if self.valid[position][1] < failure_level:
            self._violation(time, f"level-{failure_level} failure recovered from a level-{self.valid[position][1]} checkpoint")
        newer = [period for period, level in self.valid[position + 1:] if level >= failure_level]
        if newer:
            self._violation(time, f"level-{failure_level} failure skipped newer sufficient checkpoints {newer}")
        del self.valid[position + 1:]
        self.lost_time += record["lost"]

    def _run_end(self, record: Dict[str, Any]) -> None:
        time = record["time"]
        self._close_write(time)
        self._close_restart(time)
        scale = self.tolerance * time
        useful = time - self.checkpoint_time - self.restart_time
        if abs(useful - record["progress"] - self.lost_time) > scale:
            self._violation(time, f"useful time {useful!r} != committed {record['progress']!r} + lost {self.lost_time!r}")
        for name, value in (("checkpoint", self.checkpoint_time), ("restart", self.restart_time), ("lost", self.lost_time)):
            if abs(record[name] - value) > scale:
                self._violation(time, f"reported {name} time {record[name]!r} differs from the replayed {value!r}")
        total = record["progress"] + record["checkpoint"] + record["lost"] + record["restart"]
        if abs(total - time) > scale:
            self._violation(time, f"time breakdown sums to {total!r}, not the duration {time!r}")

    def feed(self, record: Dict[str, Any]) -> None:
        kind, time = record["kind"], record["time"]
        if kind == EVENT_CHECKPOINT_START:
            self.write_start = time
        elif kind == EVENT_CHECKPOINT_FIRST_DONE:
            self._close_write(time)
        elif kind == EVENT_CHECKPOINT_COMPLETE:
            self.valid.append((record["period"], record["level"]))
        elif kind == EVENT_FAILURE:
            self._close_write(time)
            self.failure_level = record["level"]
        elif kind == EVENT_RESTART_FAILED or kind == EVENT_RESTART_DONE:
            self._close_restart(time)
        elif kind == EVENT_RESTART_START:
            self.restart_start = time
        elif kind == EVENT_ROLLBACK:
            self._rollback(record)
        elif kind == EVENT_RUN_END:
            self._run_end(record)

def audit_event_log(records: Iterable[Dict[str, Any]], spec: System_Spec, tolerance: float = Settings.simulation.AUDIT_TOLERANCE) -> Audit_Report:
    """
    Replays an event log independently of the engine and checks, per replica, that every
    failure recovered from the newest surviving checkpoint of sufficient level and that
    committed, checkpoint, lost and restart time add up to the duration.

    Args:
        records (Iterable[dict]): Event records in emission order.
        spec (System_Spec): The simulated system.
        tolerance (float): Allowed error relative to the duration.

    Returns:
        Audit_Report: The checks performed and any violations.
    """
    report = Audit_Report()
    audits: Dict[int, _Replica_Audit] = {}
    for record in records:
        replica = record["replica"]
        if replica not in audits:
            audits[replica] = _Replica_Audit(replica, spec.num_levels, tolerance, report)
        audits[replica].feed(record)
    report.replicas = len(audits)
    return report

def write_event_log(records: Iterable[Dict[str, Any]], path: str) -> None:
    """Writes records as JSON lines."""
    with open(path, "w", encoding="utf-8") as file:
        for record in records:
            file.write(json.dumps(record) + "\n")

def read_event_log(path: str) -> List[Dict[str, Any]]:
    with open(path, "r", encoding="utf-8") as file:
        return [json.loads(line) for line in file if line.strip()]
