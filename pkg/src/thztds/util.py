"""Small shared helpers."""

from __future__ import annotations

import hashlib
import os

from .errors import FormatError


def worker_count() -> int:
    """Worker cap from THZ_THREADS; defaults to 1 for bit-reproducibility."""
    raw = os.environ.get("THZ_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise FormatError(f"THZ_THREADS must be an integer, got {raw!r}") from None
    return max(n, 1)


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()
