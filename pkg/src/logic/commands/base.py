from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Generic, TypeVar

from pydantic import BaseModel, ConfigDict

from src.infrastructure.storage.uows.base import AbstractUnitOfWork
from src.logic.mediator.interfaces import EventMediator


class BaseCommand(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


CT = TypeVar("CT", bound=BaseCommand)
CR = TypeVar("CR", bound=Any)


@dataclass(frozen=True)
class CommandHandler(ABC, Generic[CT, CR]):
    """Writes into a run directory through ``uow`` and publishes the entity events it collects."""

    uow: AbstractUnitOfWork
    mediator: EventMediator

    @abstractmethod
    async def handle(self, command: CT) -> CR: ...
