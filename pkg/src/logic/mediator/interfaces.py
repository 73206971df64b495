from abc import ABC, abstractmethod
from collections import defaultdict
from collections.abc import Iterable
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Type

from src.domain.base.events import BaseEvent

if TYPE_CHECKING:
    from src.logic.commands.base import BaseCommand, CommandHandler
    from src.logic.events.base import EventHandler
    from src.logic.queries.base import BaseQuery, QueryHandler


@dataclass(eq=False)
class EventMediator(ABC):
    """What command handlers see: somewhere to publish the events their entities collected."""

    events_map: dict[Type[BaseEvent], list["EventHandler"]] = field(
        default_factory=lambda: defaultdict(list),
        kw_only=True,
    )

    @abstractmethod
    def register_event(self, event: Type[BaseEvent], event_handlers: Iterable["EventHandler"]): ...

    @abstractmethod
    async def publish(self, events: Iterable[BaseEvent]): ...


@dataclass(eq=False)
class CommandMediator(ABC):
    commands_map: dict[Type["BaseCommand"], list["CommandHandler"]] = field(
        default_factory=lambda: defaultdict(list),
        kw_only=True,
    )

    @abstractmethod
    def register_command(self, command: Type["BaseCommand"], command_handlers: Iterable["CommandHandler"]): ...

    @abstractmethod
    async def handle_command(self, command: "BaseCommand") -> list[Any]: ...


@dataclass(eq=False)
class QueryMediator(ABC):
    queries_map: dict[Type["BaseQuery"], "QueryHandler"] = field(
        default_factory=dict,
        kw_only=True,
    )

    @abstractmethod
    def register_query(self, query: Type["BaseQuery"], query_handler: "QueryHandler"): ...

    @abstractmethod
    async def handle_query(self, query: "BaseQuery") -> Any: ...
