"""Canonical JSON and digests.

Sorted keys, compact separators, floats rounded to six decimal places.
Golden files, state digests, and the UI stream all depend on this exact
formatting; change nothing here without regenerating the goldens.
"""

from __future__ import annotations

import hashlib
import json

PRECISION = 6


def _canon(value):
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, float):
        r = round(value, PRECISION)
        if r == 0.0:
            return 0.0  # fold -0.0
        return r
    if isinstance(value, dict):
        out = {}
        for k, v in value.items():
            if not isinstance(k, str):
                raise TypeError(f"non-string key {k!r}")
            out[k] = _canon(v)
        return out
    if isinstance(value, (list, tuple)):
        return [_canon(v) for v in value]
    raise TypeError(f"not canonicalizable: {type(value).__name__}")


def canonical_json(value) -> str:
    return json.dumps(
        _canon(value),
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=True,
        allow_nan=False,
    )


def canonical_bytes(value) -> bytes:
    return canonical_json(value).encode("utf-8")


def digest(value) -> str:
    return hashlib.sha256(canonical_bytes(value)).hexdigest()


class RollingDigest:
    """SHA-256 over a sequence of canonical JSON documents (one per tick)."""

    def __init__(self) -> None:
        self._h = hashlib.sha256()

    def update(self, value) -> None:
        self._h.update(canonical_bytes(value))
        self._h.update(b"\n")

    def hexdigest(self) -> str:
        return self._h.hexdigest()
