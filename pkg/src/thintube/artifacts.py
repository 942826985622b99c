"""Deterministic CSV/JSON writers with a one-line provenance header."""
import hashlib
import json
from pathlib import Path

import numpy as np

from . import __version__

FLOAT_FMT = "%.12e"


def config_digest(config_dict):
    """SHA-256 of the canonical JSON form of a config mapping."""
    blob = json.dumps(config_dict, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def provenance_line(digest="none", seed=None):
    return f"# thintube {__version__} config_sha256={digest} seed={seed}"


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    if v is None:
        return "nan"
    return FLOAT_FMT % float(v)


def write_csv(path, columns, rows, provenance):
    """Write ``rows`` (iterables matching ``columns``) after the provenance line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(provenance + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def read_csv(path):
    """Inverse of ``write_csv`` for numeric tables: returns (columns, array)."""
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if not ln.startswith("#")]
    cols = lines[0].split(",")
    data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]]).reshape(-1, len(cols))
    return cols, data


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return None if not np.isfinite(x) else float(FLOAT_FMT % x)
    return obj


def write_json(path, payload, provenance):
    """JSON document with the provenance line stored under ``"provenance"``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"provenance": provenance.lstrip("# ")}
    doc.update(_jsonable(payload))
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=False)
        fh.write("\n")
    return path
