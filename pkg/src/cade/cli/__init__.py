"""Experiment configuration, runner, and reporting."""

from .config import (
    ConfigError,
    ExperimentConfig,
    MethodEntry,
    RunCell,
    TrainSection,
    config_hash,
    config_to_dict,
    dump_config,
    expand_cells,
    load_config,
    make_run_config,
    parse_config,
    run_config_dict,
)
from .figures import render_figures
from .main import build_parser, main
from .runner import existing_hashes, run_matrix, setting_label
from .tables import build_sections, read_records, render_csv, render_text, write_tables

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "MethodEntry",
    "RunCell",
    "TrainSection",
    "build_parser",
    "build_sections",
    "config_hash",
    "config_to_dict",
    "dump_config",
    "existing_hashes",
    "expand_cells",
    "load_config",
    "main",
    "make_run_config",
    "parse_config",
    "read_records",
    "render_csv",
    "render_figures",
    "render_text",
    "run_config_dict",
    "run_matrix",
    "setting_label",
    "write_tables",
]
