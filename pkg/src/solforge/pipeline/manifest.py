"""Run manifest: config hash, input digests, produced artifacts and timings."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..util import sha256_file, write_json

MANIFEST_NAME = "run_manifest.json"


@dataclass
class RunManifest:
    root: Path
    config_hash: str
    inputs: dict[str, str] = field(default_factory=dict)
    artifacts: dict[str, str] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)

    @classmethod
    def open(cls, root: Path, cfg) -> "RunManifest":
        """Load the manifest of ``root``; a different config hash starts a fresh one."""
        path = root / MANIFEST_NAME
        digest = cfg.digest()
        if path.exists():
            data = json.loads(path.read_text(encoding="utf-8"))
            if data.get("config_hash") == digest:
                return cls(root, digest, data.get("inputs", {}), data.get("artifacts", {}), data.get("timings", {}))
        return cls(root, digest)

    def _key(self, path: Path) -> str:
        path = Path(path).resolve()
        try:
            return path.relative_to(self.root.resolve()).as_posix()
        except ValueError:
            return str(path)

    def add_input(self, path: Path) -> None:
        self.inputs[str(Path(path).resolve())] = sha256_file(path)

    def add_inputs(self, directory: Path, pattern: str) -> None:
        for p in sorted(Path(directory).rglob(pattern)):
            self.add_input(p)

    def add_artifact(self, path: Path) -> None:
        self.artifacts[self._key(path)] = sha256_file(path)

    def add_timing(self, name: str, seconds: float) -> None:
        self.timings[name] = round(seconds, 3)

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "inputs": dict(sorted(self.inputs.items())),
            "artifacts": dict(sorted(self.artifacts.items())),
            "timings": self.timings,
        }

    def save(self) -> None:
        write_json(self.root / MANIFEST_NAME, self.to_dict())
