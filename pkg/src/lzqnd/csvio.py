"""CSV emission with a self-describing metadata header.

Layout: ``# key = value`` lines (stable metadata, part of the reproducible
body), ``## key = value`` lines (volatile metadata such as timestamps and
wall times, excluded from byte-identity comparisons), one header row, then
data rows.  Floats are serialized with 17 significant digits so values
round-trip exactly.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

FLOAT_FMT = "{:.17g}"


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return FLOAT_FMT.format(float(v))
    return str(v).replace(",", ";").replace("\n", " ")


def write_csv(path, columns, metadata=None, volatile=None):
    """Write columns (list of (name, sequence)) with metadata headers."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = [name for name, _ in columns]
    arrays = [list(vals) for _, vals in columns]
    n = len(arrays[0]) if arrays else 0
    for name, a in zip(names, arrays):
        if len(a) != n:
            raise ValueError(f"column {name!r} has length {len(a)}, expected {n}")
    lines = []
    for k, v in (metadata or {}).items():
        lines.append(f"# {k} = {format_value(v)}")
    for k, v in (volatile or {}).items():
        lines.append(f"## {k} = {format_value(v)}")
    lines.append(",".join(names))
    for i in range(n):
        lines.append(",".join(format_value(a[i]) for a in arrays))
    path.write_text("\n".join(lines) + "\n")


def read_csv(path):
    """Parse a file written by :func:`write_csv`.

    Returns (metadata, volatile, columns) with columns as name -> list of
    raw strings; callers convert types as needed.
    """
    metadata, volatile = {}, {}
    header = None
    rows = []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        if line.startswith("## "):
            k, _, v = line[3:].partition(" = ")
            volatile[k] = v
        elif line.startswith("# "):
            k, _, v = line[2:].partition(" = ")
            metadata[k] = v
        elif header is None:
            header = line.split(",")
        else:
            rows.append(line.split(","))
    if header is None:
        raise ValueError(f"no header row in {path}")
    columns = {name: [r[i] for r in rows] for i, name in enumerate(header)}
    return metadata, volatile, columns


def stable_body(path) -> str:
    """The byte-comparison region: everything except '## ' volatile lines."""
    lines = [
        line
        for line in Path(path).read_text().splitlines()
        if not line.startswith("## ")
    ]
    return "\n".join(lines)
