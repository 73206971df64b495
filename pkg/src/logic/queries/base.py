from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Generic, TypeVar

from pydantic import BaseModel, ConfigDict

from src.infrastructure.storage.uows.base import AbstractUnitOfWork


class BaseQuery(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


QT = TypeVar("QT", bound=BaseQuery)
QR = TypeVar("QR", bound=Any)


@dataclass(frozen=True)
class QueryHandler(ABC, Generic[QT, QR]):
    """Read side: never commits, so nothing it touches is journaled."""

    uow: AbstractUnitOfWork

    @abstractmethod
    async def handle(self, query: QT) -> QR: ...
