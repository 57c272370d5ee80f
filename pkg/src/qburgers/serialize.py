"""Deterministic CSV/JSON writers carrying a config-hash provenance tag."""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

HASH_PREFIX = "# config_hash: "


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=_plain)
    return hashlib.sha256(blob.encode()).hexdigest()


def _plain(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, tuple):
        return list(x)
    raise TypeError(f"cannot serialize {type(x).__name__}")


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_csv(path, columns, rows, config_hash: str | None = None):
    path = Path(path)
    lines = []
    if config_hash is not None:
        lines.append(HASH_PREFIX + config_hash)
    lines.append(",".join(columns))
    lines += [",".join(format_value(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


def write_json(path, obj, config_hash: str | None = None):
    path = Path(path)
    if config_hash is not None:
        obj = {"config_hash": config_hash, **obj}
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_plain) + "\n")
    return path


def read_csv(path):
    """Return ``(config_hash, columns, rows)`` with numeric cells parsed as floats."""
    lines = Path(path).read_text().splitlines()
    h = None
    if lines and lines[0].startswith(HASH_PREFIX):
        h = lines.pop(0)[len(HASH_PREFIX):]
    columns = lines[0].split(",")
    rows = []
    for line in lines[1:]:
        row = []
        for cell in line.split(","):
            try:
                row.append(float(cell))
            except ValueError:
                row.append(cell)
        rows.append(row)
    return h, columns, rows


def read_provenance(path) -> str | None:
    path = Path(path)
    if path.suffix == ".json":
        return json.loads(path.read_text()).get("config_hash")
    first = path.read_text().split("\n", 1)[0]
    return first[len(HASH_PREFIX):] if first.startswith(HASH_PREFIX) else None


def verify_provenance(path, expected: str) -> bool:
    return read_provenance(path) == expected
