"""
nehari-bif report - deterministic CSV output and run manifests.
"""

from .csv_writer import (
    format_value,
    read_csv,
    read_grid_function,
    write_csv,
    write_gnuplot,
    write_grid_function,
)
from .manifest import RunManifest

__all__ = [
    "RunManifest",
    "format_value",
    "write_csv",
    "read_csv",
    "write_gnuplot",
    "write_grid_function",
    "read_grid_function",
]
