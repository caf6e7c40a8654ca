"""
Command-line front end: `evaluate`, `optimize`, `approx`, `simulate`, `sweep` and `compare`.

Every command reads a JSON run config (`--config`), writes csv, json or human output to
stdout or `--out`, and exits with 0 on success, 2 on invalid input and 3 on a numerical
failure.
"""
import argparse
import logging
import math
import sys
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .command_module import Command, Command_Manager
from .config_module import OUTPUT_FORMATS, Run_Config
from .errors_module import Numerical_Error, Policy_Diverges_Error, Validation_Error
from .model_module import (
    Evaluation,
    Policy,
    System_Spec,
    approx_fixed_point,
    approx_optimal_interval,
    approx_optimal_p1,
    evaluate,
    evaluate_llevel_stream,
    rate_per_second,
)
from .optimizer_module import STRATEGY_ANCHORED, STRATEGY_TOP, compare_levels, optimize, optimize_fixed_p, optimize_fixed_T
from .settings_module import Settings
from .simulator_module import AXIS_RATE_PREFIX, apply_axis, simulate, simulate_sweep, write_event_log
from .utilities_module import render_csv, render_human, render_human_table, render_json, write_output

logger = logging.getLogger(__name__)

def configure_logging(verbose: bool = False, quiet: bool = False) -> None:
    level = Settings.logging.LEVEL
    if verbose:
        level = Settings.logging.VERBOSE_LEVEL
    elif quiet:
        level = Settings.logging.QUIET_LEVEL
    logging.basicConfig(format=Settings.logging.FORMAT, level=level, stream=sys.stderr, force=True)

def _parse_floats(text: str, name: str) -> List[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError as error:
        raise Validation_Error(f"Invalid value for '{name}': expected a comma-separated list of numbers, got {text!r}") from error

def parse_grid(text: str) -> List[Tuple[str, np.ndarray]]:
    """
    Parses `axis:lo:hi:steps[,axis:lo:hi:steps]` into axis names and evenly spaced values.

    Raises:
        Validation_Error: On malformed specifications.
    """
    axes = []
    for part in text.split(","):
        pieces = part.strip().split(":")
        if len(pieces) != 4:
            raise Validation_Error(f"Invalid grid axis {part!r}: expected axis:lo:hi:steps")
        name, lo, hi, steps = pieces
        try:
            lo_value, hi_value, count = float(lo), float(hi), int(steps)
        except ValueError as error:
            raise Validation_Error(f"Invalid grid axis {part!r}: bounds must be numbers and steps an integer") from error
        if count < 1:
            raise Validation_Error(f"Invalid grid axis {part!r}: expected steps >= 1")
        axes.append((name, np.linspace(lo_value, hi_value, count)))
    if not 1 <= len(axes) <= 2:
        raise Validation_Error(f"Invalid grid {text!r}: expected one or two axes")
    return axes

def _safe_utilization(policy_builder: Callable[[], Tuple[System_Spec, Policy]]) -> float:
    """Analytic utilization, or nan where the policy diverges or is infeasible."""
    try:
        spec, policy = policy_builder()
        return evaluate(spec, policy).utilization
    except (Policy_Diverges_Error, Validation_Error):
        return math.nan

class Config_Command(Command):
    """A command driven by a run config, with the shared output and logging flags."""
    def __init__(self, settings: Settings) -> None:
        self.settings = settings

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--config", required=True, help="path of the JSON run config")
        parser.add_argument("--format", choices=OUTPUT_FORMATS, default=None, help="output format (default: config output.format)")
        parser.add_argument("--seed", type=int, default=None, help="overrides the optimizer and simulation seeds")
        parser.add_argument("--out", default=None, help="output path (default: config output.path or stdout)")
        parser.add_argument("--progress", action="store_true", help="show a progress bar for simulations")
        parser.add_argument("--verbose", action="store_true", help="log debug messages")
        parser.add_argument("--quiet", action="store_true", help="log warnings and errors only")

    def load(self, arguments: argparse.Namespace) -> Run_Config:
        config = Run_Config.load_from_json_file(arguments.config)
        if arguments.seed is not None:
            config = config.with_seed(arguments.seed)
        return config

    def emit(self, arguments: argparse.Namespace, config: Run_Config, data: Dict[str, Any], header: Sequence[str], rows: Sequence[Sequence[Any]], title: str, table: bool = False) -> None:
        output_format = arguments.format or config.output.format
        path = arguments.out or config.output.path
        if output_format == self.settings.output.FORMAT_JSON:
            text = render_json(data)
        elif output_format == self.settings.output.FORMAT_CSV:
            text = render_csv(header, rows)
        else:
            text = title + "\n" + render_human_table(header, rows) if table else render_human(data, title)
        write_output(text, path)

    def run(self, arguments: argparse.Namespace) -> None:
        config = self.load(arguments)
        self.execute(arguments, config)

    def execute(self, arguments: argparse.Namespace, config: Run_Config) -> None:
        raise NotImplementedError

def _evaluation_table(evaluation: Evaluation) -> Tuple[List[str], List[List[Any]]]:
    levels = len(evaluation.per_level_recovery_cost)
    header = ["utilization", "effective_period", "mean_ckpt_cost"] + [f"R{level}" for level in range(1, levels + 1)] + ["formula"]
    row = [evaluation.utilization, evaluation.effective_period, evaluation.mean_ckpt_cost, *evaluation.per_level_recovery_cost, evaluation.formula]
    return header, [row]

class Evaluate_Command(Config_Command):
    name = "evaluate"
    help = "evaluate the closed-form utilization of the configured policy"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        super().add_arguments(parser)
        parser.add_argument("--no-overlap-correction", action="store_true", help="stream systems: use the uncorrected T' recursion")

    def execute(self, arguments: argparse.Namespace, config: Run_Config) -> None:
        policy = config.require_policy()
        if arguments.no_overlap_correction and config.system.topology is not None:
            evaluation = evaluate_llevel_stream(config.system, policy, overlap_correction=False)
        else:
            evaluation = evaluate(config.system, policy)
        header, rows = _evaluation_table(evaluation)
        self.emit(arguments, config, evaluation.to_dict(), header, rows, "evaluation")

class Optimize_Command(Config_Command):
    name = "optimize"
    help = "find the utilization-maximizing interval and level probabilities"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        super().add_arguments(parser)
        group = parser.add_mutually_exclusive_group()
        group.add_argument("--fixed-interval", type=float, default=None, help="optimize the probabilities only, at this T in seconds")
        group.add_argument("--fixed-probabilities", default=None, help="optimize T only, for these comma-separated probabilities")

    def execute(self, arguments: argparse.Namespace, config: Run_Config) -> None:
        optimizer_config = config.optimizer_config()
        if arguments.fixed_interval is not None:
            result = optimize_fixed_T(config.system, arguments.fixed_interval, optimizer_config)
        elif arguments.fixed_probabilities is not None:
            probabilities = _parse_floats(arguments.fixed_probabilities, "fixed-probabilities")
            result = optimize_fixed_p(config.system, probabilities, optimizer_config)
        else:
            result = optimize(config.system, optimizer_config)
        levels = config.system.num_levels
        header = ["T"] + [f"p{level}" for level in range(1, levels + 1)] + ["utilization", "evaluations", "restarts_used", "converged", "plateau_width"]
        row = [result.best_policy.interval, *result.best_policy.probabilities, result.best_utilization, result.evaluations, result.restarts_used, result.converged, result.plateau_width]
        self.emit(arguments, config, result.to_dict(), header, [row], "optimum")

class Approx_Command(Config_Command):
    name = "approx"
    help = "two-level Lambert-W approximation of the optimal interval and p1"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        super().add_arguments(parser)
        group = parser.add_mutually_exclusive_group()
        group.add_argument("--p1", type=float, default=None, help="only approximate T* for this p1")
        group.add_argument("--interval", type=float, default=None, help="only approximate p1* for this T in seconds")

    def execute(self, arguments: argparse.Namespace, config: Run_Config) -> None:
        spec = config.system
        if arguments.p1 is not None:
            p1 = arguments.p1
            interval = approx_optimal_interval(spec, p1)
        elif arguments.interval is not None:
            interval = arguments.interval
            p1 = approx_optimal_p1(spec, interval)
        else:
            interval, p1 = approx_fixed_point(spec)
        utilization = _safe_utilization(lambda: (spec, Policy.two_level(interval, min(max(p1, 0.0), 1.0))))
        if math.isnan(utilization):
            logger.warning(f"Approximate policy T={interval:.6g} p1={p1:.6g} cannot be evaluated")
        data = {"T": interval, "p1": p1, "utilization": utilization}
        self.emit(arguments, config, data, ["T", "p1", "utilization"], [[interval, p1, utilization]], "approximation")

class Simulate_Command(Config_Command):
    name = "simulate"
    help = "simulate the configured policy and compare with the closed form"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        super().add_arguments(parser)
        parser.add_argument("--events", default=None, help="write the event log as JSON lines to this path")

    def execute(self, arguments: argparse.Namespace, config: Run_Config) -> None:
        simulation = config.simulation_config(progress=arguments.progress, record_events=arguments.events is not None)
        report = simulate(simulation)
        if arguments.events is not None:
            write_event_log(report.events, arguments.events)
        data = report.to_dict()
        data["analytic_utilization"] = _safe_utilization(lambda: (config.system, simulation.policy))
        header = ["replica", "utilization", "committed", "checkpoint", "lost", "restart"]
        rows = [
            [index, utilization, breakdown.committed, breakdown.checkpoint, breakdown.lost, breakdown.restart]
            for index, (utilization, breakdown) in enumerate(zip(report.per_replica_utilization, report.breakdowns))
        ]
        output_format = arguments.format or config.output.format
        if output_format == self.settings.output.FORMAT_HUMAN:
            summary = {key: value for key, value in data.items() if key != "per_replica_utilization"}
            write_output(render_human(summary, "simulation"), arguments.out or config.output.path)
            return
        self.emit(arguments, config, data, header, rows, "simulation")

class Sweep_Command(Config_Command):
    name = "sweep"
    help = "tabulate utilization over a parameter axis or a two-axis grid"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        super().add_arguments(parser)
        parser.add_argument("--grid", default=None, help="axis:lo:hi:steps[,axis:lo:hi:steps], e.g. T:100:600:51,p1:0:1:51")
        parser.add_argument("--axis", default=None, help="T, n, p<level> or lambda<level>")
        parser.add_argument("--values", default=None, help="comma-separated axis values (rates in the config's rate unit)")
        parser.add_argument("--simulate", action="store_true", help="also simulate every axis value")

    def _to_library_units(self, config: Run_Config, axis: str, value: float) -> float:
        if axis.startswith(AXIS_RATE_PREFIX):
            return rate_per_second(value, config.rate_unit)
        return value

    def _base_policy(self, config: Run_Config) -> Policy:
        if config.policy is not None:
            return config.policy
        spec = config.system
        return Policy.normalized(float(np.max(spec.checkpoint_costs)) + Settings.optimizer.T_LOWER_MARGIN, np.ones(spec.num_levels))

    def execute(self, arguments: argparse.Namespace, config: Run_Config) -> None:
        if (arguments.grid is None) == (arguments.axis is None):
            raise Validation_Error("sweep needs exactly one of --grid or --axis")
        spec, base = config.system, self._base_policy(config)

        if arguments.grid is not None:
            axes = parse_grid(arguments.grid)
            names = [name for name, _ in axes]
            value_lists = [list(values) for _, values in axes]
            points = [(a,) for a in value_lists[0]] if len(axes) == 1 else [(a, b) for a in value_lists[0] for b in value_lists[1]]
            rows = []
            for point in points:
                def build(point=point) -> Tuple[System_Spec, Policy]:
                    current_spec, current_policy = spec, base
                    for name, value in zip(names, point):
                        current_spec, current_policy = apply_axis(current_spec, current_policy, name, self._to_library_units(config, name, value))
                    return current_spec, current_policy
                rows.append([*point, _safe_utilization(build)])
            header = names + ["utilization"]
            data = {"axes": names, "rows": rows}
            self.emit(arguments, config, data, header, rows, "sweep", table=True)
            return

        if arguments.values is None:
            raise Validation_Error("--axis needs --values")
        axis = arguments.axis
        values = _parse_floats(arguments.values, "values")
        library_values = [self._to_library_units(config, axis, value) for value in values]
        analytic = [_safe_utilization(lambda value=value: apply_axis(spec, base, axis, value)) for value in library_values]
        header = [axis, "utilization"]
        rows = [[value, utilization] for value, utilization in zip(values, analytic)]
        if arguments.simulate:
            reports = simulate_sweep(config.simulation_config(base, progress=arguments.progress), axis, library_values)
            header += ["mean", "std_dev", "stderr"]
            rows = [row + [report.mean, report.std_dev, report.stderr] for row, report in zip(rows, reports)]
        data = {"axis": axis, "rows": rows}
        self.emit(arguments, config, data, header, rows, "sweep", table=True)

class Compare_Command(Config_Command):
    name = "compare"
    help = "compare optima using 1..L checkpoint levels"

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        super().add_arguments(parser)
        parser.add_argument("--strategy", choices=(STRATEGY_TOP, STRATEGY_ANCHORED), default=None, help="which levels a k-level row keeps")

    def execute(self, arguments: argparse.Namespace, config: Run_Config) -> None:
        strategy = arguments.strategy or config.strategy
        table = compare_levels(config.system, config.optimizer_config(), strategy)
        levels = config.system.num_levels
        header = ["levels", "T_star"] + [f"p{level}" for level in range(1, levels + 1)] + ["U", "pct_increase", "gain_over_previous", "retained"]
        rows = [
            [len(row.levels), row.T_star, *row.p_star, row.utilization, row.pct_increase, row.gain_over_previous, "+".join(str(level) for level in row.levels)]
            for row in table
        ]
        data = {"strategy": strategy, "rows": [row.to_dict() for row in table]}
        self.emit(arguments, config, data, header, rows, "level comparison", table=True)

COMMANDS = (Evaluate_Command, Optimize_Command, Approx_Command, Simulate_Command, Sweep_Command, Compare_Command)

def build_manager(settings: Settings) -> Command_Manager:
    manager = Command_Manager(settings)
    for command_class in COMMANDS:
        manager.add_command(command_class(settings))
    return manager

def main(argv: Optional[Sequence[str]] = None, settings: Optional[Settings] = None) -> int:
    """
    Parses `argv`, runs the chosen command and maps errors to exit codes.

    Returns:
        int: 0 on success, 2 on invalid input, 3 on numerical failure.
    """
    settings = settings if settings is not None else Settings()
    manager = build_manager(settings)
    parser = manager.build_parser(argparse.ArgumentParser(prog="checkpoint-planner", description=__doc__.strip().splitlines()[0]))
    arguments = parser.parse_args(argv)
    configure_logging(arguments.verbose, arguments.quiet)

    try:
        manager.set_command(arguments.command)
        manager.run(arguments)
    except (Validation_Error, FileNotFoundError) as error:
        logger.error(f"Invalid input: {error}")
        return settings.exit_codes.CONFIG_INVALID
    except Numerical_Error as error:
        logger.error(f"Numerical failure: {error}")
        return settings.exit_codes.NUMERICAL_FAILURE
    return settings.exit_codes.SUCCESS
