"""
Columnar CSV container for sampled matrix functions plus a JSON header.

Columns are ``theta`` followed by ``re_i_j`` and ``im_i_j`` for every entry.
The header (same stem, ``.json``) records N, n, the generator name and its
parameters; it is optional on input.
"""

import logging
import re
from pathlib import Path

import numpy as np
import pandas as pd

from specfact.circle import CircleGrid, SampledMatrixFunction
from specfact.errors import GridError, InputParseError
from utils.serialization import FLOAT_FORMAT, load_json, save_json

logger = logging.getLogger(__name__)

NODE_TOLERANCE = 1e-9
# first data row of the CSV is file line 2
HEADER_LINES = 1


def entry_columns(n):
    columns = ["theta"]
    for i in range(n):
        for j in range(n):
            columns += [f"re_{i}_{j}", f"im_{i}_{j}"]
    return columns


def to_frame(F):
    """DataFrame with one row per node."""
    data = {"theta": F.grid.nodes}
    for i in range(F.dim):
        for j in range(F.dim):
            data[f"re_{i}_{j}"] = F.values[:, i, j].real
            data[f"im_{i}_{j}"] = F.values[:, i, j].imag
    return pd.DataFrame(data, columns=entry_columns(F.dim))


def header_path(path):
    return Path(path).with_suffix(".json")


def write_density(path, F, generator="user", params=None):
    """Write ``F`` as CSV (17 significant digits) and its JSON header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    to_frame(F).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    save_json(
        header_path(path),
        {"N": F.grid.size, "n": F.dim, "generator": generator, "params": params or {}},
    )
    logger.info("wrote %s (N=%d, n=%d)", path, F.grid.size, F.dim)
    return path


def _parse_error_line(message):
    match = re.search(r"line (\d+)", message)
    return int(match.group(1)) if match else None


def read_density(path):
    """
    Read a density written by write_density (or by hand in the same layout).

    Returns:
        (SampledMatrixFunction, header dict)

    Raises:
        InputParseError: with the offending line number for malformed rows,
            missing columns, non-numeric cells or angles off the grid
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, skipinitialspace=True)
    except pd.errors.ParserError as e:
        raise InputParseError(str(e).strip(), line=_parse_error_line(str(e))) from e
    except (pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise InputParseError(f"cannot read {path}: {e}", line=1) from e

    columns = list(frame.columns)
    entries = len(columns) - 1
    n = int(round(np.sqrt(entries / 2))) if entries > 0 else 0
    if n < 1 or columns != entry_columns(n):
        raise InputParseError(
            f"expected columns theta, re_i_j, im_i_j; got {columns}", line=1
        )

    numeric = frame.apply(pd.to_numeric, errors="coerce")
    bad_rows = numeric.isna().any(axis=1) | ~np.isfinite(numeric.to_numpy()).all(axis=1)
    if bad_rows.any():
        row = int(np.argmax(bad_rows.to_numpy()))
        raise InputParseError(
            f"non-numeric or non-finite value in row {row + 1}",
            line=row + 1 + HEADER_LINES,
        )

    try:
        grid = CircleGrid(len(numeric))
    except GridError as e:
        raise InputParseError(str(e), line=len(numeric) + HEADER_LINES) from e
    theta = numeric["theta"].to_numpy()
    off_grid = np.abs(theta - grid.nodes) > NODE_TOLERANCE
    if np.any(off_grid):
        row = int(np.argmax(off_grid))
        raise InputParseError(
            f"angle {theta[row]!r} is not the grid node {grid.nodes[row]!r}",
            line=row + 1 + HEADER_LINES,
        )

    values = np.zeros((grid.size, n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            real = numeric[f"re_{i}_{j}"].to_numpy()
            values[:, i, j] = real + 1j * numeric[f"im_{i}_{j}"].to_numpy()

    header = {
        "N": grid.size,
        "n": n,
        "generator": "file",
        "params": {"path": str(path)},
    }
    if header_path(path).exists():
        header.update(load_json(header_path(path)))
    logger.info("read %s (N=%d, n=%d)", path, grid.size, n)
    return SampledMatrixFunction(grid, values), header


def write_factor(out_dir, factor, name="factor", extra=None):
    """Write a SpectralFactor's boundary values (CSV) and metadata (JSON)."""
    out_dir = Path(out_dir)
    csv_path = out_dir / f"{name}.csv"
    out_dir.mkdir(parents=True, exist_ok=True)
    to_frame(factor.plus).to_csv(csv_path, index=False, float_format=FLOAT_FORMAT)
    save_json(out_dir / f"{name}.json", {**factor.metadata(), **(extra or {})})
    return csv_path
