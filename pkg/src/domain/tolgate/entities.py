from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from src.domain.base.entities import BaseEntity
from src.domain.tolgate.exceptions import GateCountException


@dataclass
class Baseline(BaseEntity):
    """Per-layer exponential moving average of returns."""

    num_layers: int
    decay: float = 0.99
    enabled: bool = True
    values: np.ndarray | None = field(default=None, repr=False)

    def advantages(self, returns: np.ndarray) -> np.ndarray:
        """r_i - b_i with the baseline taken before this step's update; raw returns when disabled."""
        returns = np.asarray(returns, dtype=np.float64)
        if returns.shape != (self.num_layers,):
            raise GateCountException(expected=self.num_layers, received=returns.size)
        if not self.enabled:
            return returns.copy()
        if self.values is None:
            self.values = returns.copy()
        advantage = returns - self.values
        self.values = self.decay * self.values + (1.0 - self.decay) * returns
        return advantage

    def to_dict(self) -> dict:
        return {
            "num_layers": self.num_layers,
            "decay": self.decay,
            "enabled": self.enabled,
            "values": None if self.values is None else self.values.tolist(),
        }
