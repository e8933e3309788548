"""Columnar text output: comma-separated, one header line, 17 significant digits."""

from pathlib import Path

import numpy as np


def write_table(path, header, table) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table = np.atleast_2d(np.asarray(table, dtype=float))
    if table.shape[1] != len(header):
        raise ValueError(f"{len(header)} column names for {table.shape[1]} columns")
    np.savetxt(path, table, delimiter=",", fmt="%.17g", header=",".join(header), comments="")
    return path


def read_table(path):
    """Inverse of :func:`write_table`; returns ``(header, array)``. Empty fields read as nan."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.genfromtxt(path, delimiter=",", skip_header=1, filling_values=np.nan, ndmin=2)
    return header, data
