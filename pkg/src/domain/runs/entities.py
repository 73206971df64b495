from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime

from src.domain.base.entities import BaseEntity


@dataclass
class RunManifest(BaseEntity):
    """One per run directory: what ran, with which resolved config and seed, and what it wrote."""

    command: str
    config: dict
    seed: int
    git_describe: str = "unknown"
    started_at: datetime = field(default_factory=datetime.now)
    finished_at: datetime | None = None
    outputs: dict[str, str] = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    def add_output(self, kind: str, path: str) -> None:
        self.outputs[kind] = path

    def finish(self, summary: dict | None = None) -> None:
        self.finished_at = datetime.now()
        if summary:
            self.summary.update(summary)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "git_describe": self.git_describe,
            "started_at": self.started_at.isoformat(),
            "finished_at": self.finished_at.isoformat() if self.finished_at else None,
            "outputs": dict(self.outputs),
            "summary": self.summary,
        }

    @classmethod
    def from_dict(cls, data: dict) -> RunManifest:
        finished = data.get("finished_at")
        return cls(
            command=data["command"],
            config=data.get("config", {}),
            seed=int(data.get("seed", 0)),
            git_describe=data.get("git_describe", "unknown"),
            started_at=datetime.fromisoformat(data["started_at"]),
            finished_at=datetime.fromisoformat(finished) if finished else None,
            outputs=dict(data.get("outputs", {})),
            summary=dict(data.get("summary", {})),
        )
