"""Machine-readable output: CSV tables, JSON reports and run manifests.

Floats are written with 17 significant digits so that files round-trip
exactly and can serve as golden files.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import sys
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from . import __version__

DEFAULT_SEED = 20240917
SEED_ENV = "FIVEPOINT_SEED"


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return DEFAULT_SEED
    try:
        seed = int(raw)
    except ValueError as exc:
        raise ValueError(f"{SEED_ENV} must be a non-negative integer, got {raw!r}") from exc
    if seed < 0:
        raise ValueError(f"{SEED_ENV} must be non-negative")
    return seed


def fmt(x) -> str:
    """Full-precision text for one value."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    if isinstance(x, complex):
        return f"{format(x.real, '.17g')}{'+' if x.imag >= 0 else '-'}{format(abs(x.imag), '.17g')}j"
    if x is None:
        return ""
    return str(x)


def to_jsonable(obj):
    """Recursively convert numpy scalars, complex numbers and tuples for json."""
    if isinstance(obj, Mapping):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else fmt(x)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def csv_text(rows: Iterable[Mapping], columns: list[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def json_text(obj) -> str:
    # repr of a Python float is the shortest round-trip form, so json is exact
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n"


def manifest(command: str, config: Mapping, outputs: list[str] | None = None) -> dict:
    return {
        "tool": "fivepoint",
        "version": __version__,
        "command": command,
        "config": to_jsonable(dict(config)),
        "outputs": outputs or [],
        "python": sys.version.split()[0],
        "numpy": np.__version__,
    }


def emit(text: str, out: str | None, command: str, config: Mapping, stream=None) -> None:
    """Print ``text`` and, when ``out`` is given, also write it together with
    a ``run.json`` manifest in the same directory."""
    stream = stream or sys.stdout
    stream.write(text)
    if out:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        (path.parent / "run.json").write_text(json_text(manifest(command, config, [path.name])))
    else:
        sys.stderr.write(json.dumps(to_jsonable(manifest(command, config)), sort_keys=True) + "\n")
