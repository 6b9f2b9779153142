"""CSV output with '#'-prefixed provenance header lines."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

__all__ = ["read_csv", "write_csv"]


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, columns: dict, header: dict) -> Path:
    """Write equal-length ``columns`` to ``path``.

    ``header`` is written as ``# key: value`` lines before the column row;
    floats use ``repr`` so files round-trip and are byte-stable.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns)
    cols = [np.asarray(columns[n]) for n in names]
    lengths = {len(c) for c in cols}
    if len(lengths) > 1:
        raise ValueError(f"columns have different lengths: {sorted(lengths)}")
    with path.open("w", newline="") as fh:
        for k, v in header.items():
            fh.write(f"# {k}: {json.dumps(v, default=str)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*cols):
            w.writerow([_fmt(x) for x in row])
    return path


def read_csv(path):
    """Return ``(header, columns)``; numeric columns become float arrays."""
    header, rows = {}, []
    with Path(path).open() as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            k, _, v = line[1:].strip().partition(":")
            header[k.strip()] = json.loads(v.strip())
        else:
            body.append(line)
    rows = list(csv.reader(body))
    names, data = rows[0], rows[1:]
    cols = {}
    for i, n in enumerate(names):
        vals = [r[i] for r in data]
        try:
            cols[n] = np.array([float(x) for x in vals])
        except ValueError:
            cols[n] = np.array(vals)
    return header, cols
