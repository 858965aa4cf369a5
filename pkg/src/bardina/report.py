"""Self-describing JSON report envelope written by every subcommand."""

from __future__ import annotations

import datetime as _dt
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__, serialize


@dataclass
class ReportDocument:
    command: str
    config: dict
    payload: dict
    seeds: dict = field(default_factory=dict)
    version: str = __version__
    timestamp: str = ""

    def __post_init__(self):
        if not self.timestamp:
            now = _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0)
            self.timestamp = now.isoformat().replace("+00:00", "Z")

    def payload_bytes(self) -> bytes:
        """Canonical payload serialization; identical inputs give identical bytes."""
        return serialize.dumps(self.payload).encode()

    def payload_digest(self) -> str:
        return hashlib.sha256(self.payload_bytes()).hexdigest()

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "command": self.command,
            "timestamp": self.timestamp,
            "config": self.config,
            "seeds": self.seeds,
            "payload": self.payload,
            "payload_sha256": self.payload_digest(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> ReportDocument:
        doc = cls(d["command"], d["config"], d["payload"], d.get("seeds", {}), d["version"], d["timestamp"])
        if "payload_sha256" in d and d["payload_sha256"] != doc.payload_digest():
            raise ValueError("payload digest mismatch")
        return doc

    def dumps(self) -> str:
        return serialize.dumps(self.to_dict())

    def write(self, path: Path) -> None:
        serialize.write_json(Path(path), self.to_dict())

    @classmethod
    def read(cls, path: Path) -> ReportDocument:
        return cls.from_dict(serialize.read_json(Path(path)))
