"""Run manifests: one reproducibility record per output directory.

A manifest pins the resolved configuration, all seeds, input-file hashes,
tool version, and output paths. Re-running a command with the same manifest
and a single worker reproduces outputs byte-for-byte; all randomness flows
from recorded seeds, never from time.
"""

from __future__ import annotations

import hashlib
import json
from datetime import datetime, timezone
from pathlib import Path

from importlib.metadata import PackageNotFoundError, version

from .errors import ValidationError

MANIFEST_NAME = "run.manifest.json"

try:
    TOOL_VERSION = version("w2vtuner")
except PackageNotFoundError:  # running from a source tree
    TOOL_VERSION = "0.0.0-dev"


def file_sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def build_manifest(command: str, config: dict, seeds: list[int],
                   inputs: list[str | Path], outputs: list[str | Path]) -> dict:
    return {
        "command": command,
        "config": config,
        "seeds": seeds,
        "inputs": {str(p): file_sha256(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
        "tool_version": TOOL_VERSION,
        "created_at": datetime.now(timezone.utc).isoformat(),
    }


def write_manifest(manifest: dict, out_dir: str | Path) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / MANIFEST_NAME
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
    return path


def read_manifest(out_dir: str | Path) -> dict:
    path = Path(out_dir) / MANIFEST_NAME
    if not path.exists():
        raise ValidationError(f"no manifest found at {path}")
    return json.loads(path.read_text(encoding="utf-8"))
