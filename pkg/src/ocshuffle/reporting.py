"""Structured result output: JSON-lines records and CSV sweeps.

Every record embeds the master seed, a hash of the resolved
configuration, and a build identifier, and contains no timestamps, so
re-running the same configuration reproduces the output bytes exactly.
"""

from __future__ import annotations

import csv
import hashlib
import json
import subprocess
from dataclasses import asdict, is_dataclass
from typing import Iterable, Optional, Sequence

_BUILD_ID = None


def build_id() -> str:
    global _BUILD_ID
    if _BUILD_ID is None:
        try:
            _BUILD_ID = subprocess.run(
                ["git", "describe", "--always", "--dirty"],
                capture_output=True, text=True, timeout=10,
            ).stdout.strip() or "unknown"
        except Exception:
            _BUILD_ID = "unknown"
    return _BUILD_ID


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _plain(value):
    if is_dataclass(value) and not isinstance(value, type):
        return {k: _plain(v) for k, v in asdict(value).items()}
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set)):
        return [_plain(v) for v in value]
    if hasattr(value, "item"):  # numpy scalars
        return value.item()
    return value


def record(experiment: str, config: dict, payload: dict, seed: int) -> dict:
    return {
        "experiment": experiment,
        "config": _plain(config),
        "config_hash": config_hash(_plain(config)),
        "seed": seed,
        "build": build_id(),
        "result": _plain(payload),
    }


def write_jsonl(path: Optional[str], records: Iterable[dict]) -> str:
    lines = [json.dumps(r, sort_keys=True) for r in records]
    body = "\n".join(lines) + ("\n" if lines else "")
    if path:
        with open(path, "w") as fh:
            fh.write(body)
    return body


def write_csv(path: Optional[str], header: Sequence[str],
              rows: Iterable[Sequence]) -> str:
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    body = buf.getvalue()
    if path:
        with open(path, "w") as fh:
            fh.write(body)
    return body
