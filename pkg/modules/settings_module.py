import logging

class Unit_Settings:
    SECONDS_PER_DAY: float = 86400.0

    RATE_UNIT_PER_DAY: str = "per_day"
    RATE_UNIT_PER_SECOND: str = "per_second"
    TIME_UNIT_SECONDS: str = "seconds"

class Numerics_Settings:
    W_SERIES_THRESHOLD: float = 1e-4
    W_MAX_ITERATIONS: int = 50
    W_TOLERANCE: float = 1e-15

    GOLDEN_PRESCAN_POINTS: int = 64

    # Below this value of rate*horizon the conditional MTTF uses its Taylor series.
    MTTF_SERIES_SWITCH: float = 1e-3

class Model_Settings:
    PROBABILITY_SUM_TOLERANCE: float = 1e-12

    FIXED_POINT_MAX_ITERATIONS: int = 500
    FIXED_POINT_TOLERANCE: float = 1e-10
    FIXED_POINT_START_P1: float = 0.5

class Optimizer_Settings:
    MULTISTARTS: int = 8
    SIMPLEX_TOLERANCE: float = 1e-9
    T_TOLERANCE: float = 0.01
    SEED: int = 0
    WORKERS: int = 1

    T_LOWER_MARGIN: float = 1.0
    T_UPPER_FAILURE_MULTIPLE: float = 10.0
    T_UPPER_CAP: float = 1e6

    MAX_REFINEMENT_CYCLES: int = 60
    NELDER_MEAD_MAX_ITERATIONS: int = 4000
    LOGIT_BOUND: float = 40.0
    LHS_LOGIT_SPAN: float = 3.0

    P_LINE_TOLERANCE: float = 1e-8
    PLATEAU_TOLERANCE: float = 1e-4

class Simulation_Settings:
    REPLICAS: int = 100
    DURATION_FAILURE_MULTIPLE: float = 1000.0
    SEED: int = 0
    WORKERS: int = 1
    MIN_PERIODS: float = 10.0
    LEVEL_DRAW_BLOCK: int = 4096
    AUDIT_TOLERANCE: float = 1e-9

    SCOPE_LOWER_LEVELS: str = "lower_levels"
    SCOPE_ALL_LEVELS: str = "all_levels"
    # Accepted spellings of the scopes above.
    SCOPE_ALIASES: dict = {"paper_assumption": "lower_levels"}

    # Simulated horizon used when every failure rate is zero.
    NO_FAILURE_DURATION_PERIODS: float = 1000.0

class Output_Settings:
    HUMAN_SIGNIFICANT_DIGITS: int = 6
    CSV_LINE_TERMINATOR: str = "\n"
    FORMAT_CSV: str = "csv"
    FORMAT_JSON: str = "json"
    FORMAT_HUMAN: str = "human"

class Logging_Settings:
    FORMAT: str = "%(asctime)s %(levelname)s %(name)s: %(message)s"
    LEVEL: int = logging.INFO
    VERBOSE_LEVEL: int = logging.DEBUG
    QUIET_LEVEL: int = logging.WARNING

class Exit_Code_Settings:
    SUCCESS: int = 0
    CONFIG_INVALID: int = 2
    NUMERICAL_FAILURE: int = 3

class Settings:
    units: Unit_Settings = Unit_Settings()
    numerics: Numerics_Settings = Numerics_Settings()
    model: Model_Settings = Model_Settings()
    optimizer: Optimizer_Settings = Optimizer_Settings()
    simulation: Simulation_Settings = Simulation_Settings()
    output: Output_Settings = Output_Settings()
    logging: Logging_Settings = Logging_Settings()
    exit_codes: Exit_Code_Settings = Exit_Code_Settings()
