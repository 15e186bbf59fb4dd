"""JSON reading and deterministic, atomic JSON writing."""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import ParseError

SIG_DIGITS = 12


def canonical(obj, digits: int = SIG_DIGITS):
    """Convert ``obj`` to plain JSON types with floats rounded to ``digits``.

    Non-finite floats become the strings ``"inf"``, ``"-inf"`` and ``"nan"``;
    tuples, sets and numpy arrays become lists (sets sorted).
    """
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        x = float(f"{x:.{digits}g}")
        return 0.0 if x == 0 else x
    if isinstance(obj, dict):
        return {str(k): canonical(v, digits) for k, v in obj.items()}
    if isinstance(obj, (set, frozenset)):
        return sorted((canonical(v, digits) for v in obj), key=repr)
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [canonical(v, digits) for v in obj]
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    return json.dumps(canonical(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj) -> Path:
    """Write ``obj`` canonically to ``path`` through a temp file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = dumps(obj)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def read_json(path):
    """Parse a JSON file; syntax errors become :class:`ParseError` with position."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def content_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
