"""
CSV output.

Every file starts with a `# manifest=<sha256>` comment row, optional `# key=value` rows, then
a header row naming the columns. Floats are written with 17 significant digits so values
read back bit-for-bit. Nothing time-dependent goes into these files.
"""

import csv
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from ..core.errors import ConfigError
from ..core.grid import Grid, GridFunction

log = logging.getLogger(__name__)


def format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def write_csv(
    path: Path,
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
    manifest_hash: str,
    meta: Optional[Dict[str, Any]] = None,
) -> Path:
    """Write one table; returns the path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# manifest={manifest_hash}\n")
        for key, value in (meta or {}).items():
            fh.write(f"# {key}={format_value(value)}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        count = 0
        for row in rows:
            if len(row) != len(columns):
                raise ValueError(f"row has {len(row)} fields, expected {len(columns)}")
            writer.writerow([format_value(v) for v in row])
            count += 1
    log.debug("Wrote %d rows to %s", count, path)
    return path


def read_csv(path: Path):
    """(meta, columns, rows) of a file written by write_csv; values stay strings."""
    meta: Dict[str, str] = {}
    data: List[str] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key.strip()] = value
            else:
                data.append(line)
    table = list(csv.reader(data))
    if not table:
        return meta, [], []
    return meta, table[0], table[1:]


def write_gnuplot(path: Path, pairs: Iterable[Sequence[float]], title: str) -> Path:
    """Whitespace-separated two-column data file for external plotters."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# {title}\n")
        for x, y in pairs:
            fh.write(f"{format_value(float(x))} {format_value(float(y))}\n")
    return path


_GRID_COLUMNS = ["dim", "n", "h", "length"]


def write_grid_function(path: Path, u: GridFunction, manifest_hash: str) -> Path:
    """Grid header row (dim, n, h, length) followed by one column of nodal values."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    g = u.grid
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# manifest={manifest_hash}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_GRID_COLUMNS)
        writer.writerow([format_value(v) for v in (g.dim, g.n, g.h, g.length)])
        writer.writerow(["value"])
        writer.writerows([format_value(v)] for v in u.values)
    return path


def read_grid_function(path: Path) -> GridFunction:
    """Inverse of write_grid_function."""
    try:
        _, columns, rows = read_csv(Path(path))
    except FileNotFoundError as exc:
        raise ConfigError("field file not found", path=str(path)) from exc
    if columns != _GRID_COLUMNS or len(rows) < 2 or rows[1] != ["value"]:
        raise ConfigError("not a grid function file", path=str(path))
    dim, n, _, length = rows[0]
    grid = Grid(dim=int(dim), n=int(n), length=float(length))
    values = np.array([float(row[0]) for row in rows[2:]])
    return GridFunction(grid, values)
