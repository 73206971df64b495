from abc import ABC
from dataclasses import dataclass, field
from datetime import datetime

from dataclasses_json import dataclass_json


@dataclass_json
@dataclass(kw_only=True)
class BaseEvent(ABC):
    """Raised by an entity while a run is in progress; ``run_dir`` is where handlers record it."""

    run_dir: str
    occurred_at: datetime = field(default_factory=datetime.now)

    @property
    def name(self) -> str:
        return type(self).__name__
