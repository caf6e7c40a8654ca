import json
import logging
from dataclasses import dataclass, replace
from os.path import exists
from typing import Any, Dict, Iterable, Optional, Tuple

from .errors_module import Validation_Error
from .model_module import Level_Spec, Policy, System_Spec, Topology_Spec, rate_per_second
from .optimizer_module import STRATEGY_ANCHORED, STRATEGY_TOP, Optimizer_Config
from .settings_module import Settings
from .simulator_module import Simulation_Config, normalize_scope

logger = logging.getLogger(__name__)

RATE_UNITS = (Settings.units.RATE_UNIT_PER_DAY, Settings.units.RATE_UNIT_PER_SECOND)
TIME_UNITS = (Settings.units.TIME_UNIT_SECONDS,)
OUTPUT_FORMATS = (Settings.output.FORMAT_CSV, Settings.output.FORMAT_JSON, Settings.output.FORMAT_HUMAN)

def _check_keys(node: Any, path: str, required: Iterable[str], optional: Iterable[str] = ()) -> Dict[str, Any]:
    if not isinstance(node, dict):
        raise Validation_Error(f"Invalid type for '{path}': expected an object, got {type(node).__name__}")
    required, optional = tuple(required), tuple(optional)
    unknown = sorted(set(node) - set(required) - set(optional))
    if unknown:
        raise Validation_Error(f"Unknown key '{path}.{unknown[0]}'")
    for key in required:
        if key not in node:
            raise Validation_Error(f"Missing key '{path}.{key}'")
    return node

def _number(node: Any, path: str) -> float:
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        raise Validation_Error(f"Invalid type for '{path}': expected a number, got {type(node).__name__}")
    return float(node)

def _integer(node: Any, path: str) -> int:
    if isinstance(node, bool) or not isinstance(node, int):
        raise Validation_Error(f"Invalid type for '{path}': expected an integer, got {type(node).__name__}")
    return node

def _quantity(node: Any, path: str, units: Tuple[str, ...]) -> Tuple[float, str]:
    """Reads a {"value": x, "unit": u} pair; bare numbers are rejected."""
    if not isinstance(node, dict):
        raise Validation_Error(f"Invalid value for '{path}': expected a tagged quantity {{\"value\": ..., \"unit\": one of {units}}}, got {node!r}")
    _check_keys(node, path, ("value", "unit"))
    unit = node["unit"]
    if unit not in units:
        raise Validation_Error(f"Invalid unit for '{path}': expected one of {units}, got {unit!r}")
    return _number(node["value"], f"{path}.value"), unit

def _seconds(node: Any, path: str) -> float:
    return _quantity(node, path, TIME_UNITS)[0]

@dataclass(frozen=True)
class Simulation_Section:
    """Simulation settings from a run config; combined with a policy by `Run_Config.simulation_config`."""
    duration: Optional[float] = None
    replicas: int = Settings.simulation.REPLICAS
    seed: int = Settings.simulation.SEED
    restart_failure_scope: str = Settings.simulation.SCOPE_LOWER_LEVELS
    level_sequence: Optional[Tuple[int, ...]] = None
    workers: int = Settings.simulation.WORKERS

@dataclass(frozen=True)
class Output_Section:
    format: str = Settings.output.FORMAT_HUMAN
    path: Optional[str] = None

@dataclass(frozen=True)
class Run_Config:
    """
    A parsed run configuration.

    Attributes:
        system (System_Spec): The system, rates converted to failures per second.
        policy (Optional[Policy]): The policy to evaluate or simulate.
        optimizer (Optional[Optimizer_Config]): Optimizer settings.
        strategy (str): Level subset strategy used by the compare command.
        simulation (Optional[Simulation_Section]): Simulator settings.
        output (Output_Section): Output format and path.
        rate_unit (str): Unit of the first level's failure rate; sweep values for rate axes use it.
    """
    system: System_Spec
    policy: Optional[Policy] = None
    optimizer: Optional[Optimizer_Config] = None
    strategy: str = STRATEGY_TOP
    simulation: Optional[Simulation_Section] = None
    output: Output_Section = Output_Section()
    rate_unit: str = Settings.units.RATE_UNIT_PER_SECOND

    def require_policy(self) -> Policy:
        if self.policy is None:
            raise Validation_Error("Missing key 'policy': this command needs a policy")
        return self.policy

    def optimizer_config(self) -> Optimizer_Config:
        return self.optimizer if self.optimizer is not None else Optimizer_Config()

    def simulation_config(self, policy: Optional[Policy] = None, progress: bool = False, record_events: bool = False) -> Simulation_Config:
        """Builds the simulator configuration for `policy` (the config's own policy by default)."""
        section = self.simulation if self.simulation is not None else Simulation_Section()
        return Simulation_Config(
            spec=self.system,
            policy=policy if policy is not None else self.require_policy(),
            duration=section.duration,
            replicas=section.replicas,
            seed=section.seed,
            restart_failure_scope=section.restart_failure_scope,
            level_sequence=section.level_sequence,
            workers=section.workers,
            record_events=record_events,
            progress=progress,
        )

    def with_seed(self, seed: int) -> "Run_Config":
        """Overrides both the optimizer and the simulation seed."""
        optimizer = replace(self.optimizer_config(), seed=seed)
        simulation = replace(self.simulation if self.simulation is not None else Simulation_Section(), seed=seed)
        return replace(self, optimizer=optimizer, simulation=simulation)

    @staticmethod
    def from_dict(data: Any) -> "Run_Config":
        """
        Parses a run configuration document.

        Args:
            data (Any): The decoded JSON document.

        Returns:
            Run_Config: The parsed configuration.

        Raises:
            Validation_Error: On unknown or missing keys, untagged quantities, bad units or violated invariants.
        """
        _check_keys(data, "config", ("system",), ("policy", "optimizer", "simulation", "output"))
        system, rate_unit = _parse_system(data["system"])
        policy = _parse_policy(data["policy"]) if "policy" in data else None
        optimizer, strategy = _parse_optimizer(data["optimizer"]) if "optimizer" in data else (None, STRATEGY_TOP)
        simulation = _parse_simulation(data["simulation"]) if "simulation" in data else None
        output = _parse_output(data["output"]) if "output" in data else Output_Section()
        return Run_Config(system, policy, optimizer, strategy, simulation, output, rate_unit)

    @staticmethod
    def load_from_json_file(path: str) -> "Run_Config":
        """
        Loads a run configuration from a JSON file.

        Raises:
            FileNotFoundError: If the file does not exist.
            Validation_Error: If the file is not valid JSON or fails validation.
        """
        if not exists(path):
            raise FileNotFoundError(f"File Not Found: {path}")
        with open(path, "r", encoding="utf-8") as file:
            try:
                data = json.load(file)
            except json.JSONDecodeError as error:
                raise Validation_Error(f"Invalid JSON in {path}: {error}") from error
        config = Run_Config.from_dict(data)
        logger.info(f"Loaded run config from {path}: {config.system.num_levels} levels, topology={config.system.topology is not None}")
        return config

def _parse_system(node: Any) -> Tuple[System_Spec, str]:
    _check_keys(node, "system", ("levels",), ("topology", "strict_ordering"))
    levels_node = node["levels"]
    if not isinstance(levels_node, list) or not levels_node:
        raise Validation_Error("Invalid value for 'system.levels': expected a non-empty list")

    levels = []
    rate_unit = Settings.units.RATE_UNIT_PER_SECOND
    for index, level_node in enumerate(levels_node):
        path = f"system.levels[{index}]"
        _check_keys(level_node, path, ("failure_rate", "checkpoint_cost", "restart_cost"))
        value, unit = _quantity(level_node["failure_rate"], f"{path}.failure_rate", RATE_UNITS)
        if index == 0:
            rate_unit = unit
        levels.append(Level_Spec(
            failure_rate=rate_per_second(value, unit),
            checkpoint_cost=_seconds(level_node["checkpoint_cost"], f"{path}.checkpoint_cost"),
            restart_cost=_seconds(level_node["restart_cost"], f"{path}.restart_cost"),
        ))

    topology = None
    if "topology" in node and node["topology"] is not None:
        topology_node = _check_keys(node["topology"], "system.topology", ("critical_path_operators", "hop_delay"))
        topology = Topology_Spec(
            critical_path_operators=_integer(topology_node["critical_path_operators"], "system.topology.critical_path_operators"),
            hop_delay=_seconds(topology_node["hop_delay"], "system.topology.hop_delay"),
        )
    strict = node.get("strict_ordering", True)
    if not isinstance(strict, bool):
        raise Validation_Error(f"Invalid type for 'system.strict_ordering': expected a boolean, got {type(strict).__name__}")
    return System_Spec(tuple(levels), topology, strict), rate_unit

def _parse_policy(node: Any) -> Policy:
    _check_keys(node, "policy", ("interval", "probabilities"))
    probabilities = node["probabilities"]
    if not isinstance(probabilities, list):
        raise Validation_Error("Invalid value for 'policy.probabilities': expected a list")
    return Policy(
        _seconds(node["interval"], "policy.interval"),
        tuple(_number(p, f"policy.probabilities[{i}]") for i, p in enumerate(probabilities)),
    )

def _parse_optimizer(node: Any) -> Tuple[Optimizer_Config, str]:
    _check_keys(node, "optimizer", (), ("T_bounds", "multistarts", "simplex_tolerance", "T_tolerance", "seed", "workers", "strategy"))
    fields: Dict[str, Any] = {}
    if "T_bounds" in node:
        bounds = node["T_bounds"]
        if not isinstance(bounds, list) or len(bounds) != 2:
            raise Validation_Error("Invalid value for 'optimizer.T_bounds': expected [lo, hi]")
        fields["T_bounds"] = (_seconds(bounds[0], "optimizer.T_bounds[0]"), _seconds(bounds[1], "optimizer.T_bounds[1]"))
    for key in ("multistarts", "seed", "workers"):
        if key in node:
            fields[key] = _integer(node[key], f"optimizer.{key}")
    if "simplex_tolerance" in node:
        fields["simplex_tolerance"] = _number(node["simplex_tolerance"], "optimizer.simplex_tolerance")
    if "T_tolerance" in node:
        fields["T_tolerance"] = _seconds(node["T_tolerance"], "optimizer.T_tolerance")
    strategy = node.get("strategy", STRATEGY_TOP)
    if strategy not in (STRATEGY_TOP, STRATEGY_ANCHORED):
        raise Validation_Error(f"Invalid value for 'optimizer.strategy': expected '{STRATEGY_TOP}' or '{STRATEGY_ANCHORED}', got {strategy!r}")
    return Optimizer_Config(**fields), strategy

def _parse_simulation(node: Any) -> Simulation_Section:
    _check_keys(node, "simulation", (), ("duration", "replicas", "seed", "restart_failure_scope", "level_sequence", "workers"))
    fields: Dict[str, Any] = {}
    if "duration" in node:
        fields["duration"] = _seconds(node["duration"], "simulation.duration")
    for key in ("replicas", "seed", "workers"):
        if key in node:
            fields[key] = _integer(node[key], f"simulation.{key}")
    if "restart_failure_scope" in node:
        fields["restart_failure_scope"] = normalize_scope(node["restart_failure_scope"])
    if "level_sequence" in node:
        sequence = node["level_sequence"]
        if not isinstance(sequence, list):
            raise Validation_Error("Invalid value for 'simulation.level_sequence': expected a list of levels")
        fields["level_sequence"] = tuple(_integer(level, f"simulation.level_sequence[{i}]") for i, level in enumerate(sequence))
    return Simulation_Section(**fields)

def _parse_output(node: Any) -> Output_Section:
    _check_keys(node, "output", (), ("format", "path"))
    output_format = node.get("format", Settings.output.FORMAT_HUMAN)
    if output_format not in OUTPUT_FORMATS:
        raise Validation_Error(f"Invalid value for 'output.format': expected one of {OUTPUT_FORMATS}, got {output_format!r}")
    path = node.get("path")
    if path is not None and not isinstance(path, str):
        raise Validation_Error(f"Invalid type for 'output.path': expected 'str', got {type(path).__name__}")
    return Output_Section(output_format, path)
