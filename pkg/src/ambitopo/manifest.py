"""Run manifests: enough context to reproduce any command bit-for-bit.

Every CLI command writes a manifest next to its outputs. The manifest (not
the data files) is the only artifact carrying timestamps, so re-running a
manifest with the deterministic mock embedder regenerates byte-identical
CSV/JSON outputs.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

MANIFEST_NAME = "manifest.json"


@dataclass
class RunManifest:
    command: str
    args: dict
    seed: int | None
    package_version: str
    created_at: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    outputs: list[str] = field(default_factory=list)

    def write(self, out_dir) -> Path:
        path = Path(out_dir) / MANIFEST_NAME
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2)
            fh.write("\n")
        return path

    @classmethod
    def load(cls, path) -> "RunManifest":
        with open(path) as fh:
            data = json.load(fh)
        return cls(**data)
