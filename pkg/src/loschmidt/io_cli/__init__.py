"""Configuration, deterministic output writers, and the command line."""

from .config import RunConfig, build_config, load_config_file, parse_config_text
from .writers import (
    base_metadata,
    read_echo_csv,
    write_echo_csv,
    write_gnuplot,
    write_metadata,
    write_scan_csv,
    write_spectrum_csv,
)

__all__ = [
    "RunConfig",
    "build_config",
    "load_config_file",
    "parse_config_text",
    "base_metadata",
    "read_echo_csv",
    "write_echo_csv",
    "write_gnuplot",
    "write_metadata",
    "write_scan_csv",
    "write_spectrum_csv",
]
