"""Run manifest: enough metadata to reproduce a run bit-for-bit
(excluding its timestamp)."""

from __future__ import annotations

import datetime as dt
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from . import __version__


@dataclass(frozen=True)
class RunManifest:
    tool_version: str
    config_digest: str
    master_seed: int
    created_at: str
    outputs: tuple[str, ...]

    def to_json(self) -> str:
        return json.dumps(
            {
                "tool_version": self.tool_version,
                "config_digest": self.config_digest,
                "master_seed": self.master_seed,
                "created_at": self.created_at,
                "outputs": list(self.outputs),
            },
            indent=2,
        )


def config_digest(config_bytes: bytes) -> str:
    return hashlib.sha256(config_bytes).hexdigest()


def write_manifest(
    out_dir: str | Path,
    config_bytes: bytes,
    master_seed: int,
    outputs: list[Path],
) -> Path:
    out_dir = Path(out_dir)
    manifest = RunManifest(
        tool_version=__version__,
        config_digest=config_digest(config_bytes),
        master_seed=master_seed,
        created_at=dt.datetime.now(dt.timezone.utc).isoformat(),
        outputs=tuple(sorted(p.name for p in outputs)),
    )
    path = out_dir / "manifest.json"
    path.write_text(manifest.to_json() + "\n")
    return path
