"""Canonical, byte-stable JSON rendering shared by every exported artifact.

Floats never hit the JSON encoder directly: probability-like fields travel as
decimal strings with 17 significant digits (enough to round-trip a double),
so files are byte-identical across runs and platforms.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile

__all__ = ["float_str", "parse_float", "canonical_dumps", "sha256_hex", "atomic_write_text"]


def float_str(x: float) -> str:
    """Decimal string with 17 significant digits; round-trips any float64."""
    return format(float(x), ".17g")


def parse_float(s) -> float:
    return float(s)


def _reject_floats(obj):
    if isinstance(obj, float):
        raise TypeError(
            "raw float in canonical JSON payload; render it with float_str() first"
        )
    if isinstance(obj, dict):
        for v in obj.values():
            _reject_floats(v)
    elif isinstance(obj, (list, tuple)):
        for v in obj:
            _reject_floats(v)


def canonical_dumps(obj) -> str:
    """Deterministic JSON: sorted keys, fixed separators, trailing newline."""
    _reject_floats(obj)
    return json.dumps(obj, sort_keys=True, indent=2, separators=(",", ": ")) + "\n"


def sha256_hex(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def atomic_write_text(path, text: str) -> None:
    """Write via a temp file and rename, so readers never see partial files."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-seqaudit-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
