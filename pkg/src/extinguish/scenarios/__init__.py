"""Configuration, shipped scenarios, runner, property suites and CLI."""
from .catalog import CATALOG, load_scenario, scenario_names
from .config import RunConfig, format_config, parse_config
from .runner import RunSummary, read_series_csv, run_scenario, run_sweep, write_series_csv
from .verify import verify_suite

__all__ = [
    "CATALOG",
    "RunConfig",
    "RunSummary",
    "format_config",
    "load_scenario",
    "parse_config",
    "read_series_csv",
    "run_scenario",
    "run_sweep",
    "scenario_names",
    "verify_suite",
    "write_series_csv",
]
