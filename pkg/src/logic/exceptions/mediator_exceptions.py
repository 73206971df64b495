from dataclasses import dataclass

from src.logic.exceptions.base_exception import LogicException


@dataclass(eq=False)
class CommandHandlersNotRegisteredException(LogicException):
    command_type: type

    @property
    def message(self):
        return f"No handlers registered for command: {self.command_type}"

    @property
    def title(self) -> str:
        return self.message


@dataclass(eq=False)
class QueryHandlersNotRegisteredException(LogicException):
    query_type: type

    @property
    def message(self):
        return f"No handler registered for query: {self.query_type}"

    @property
    def title(self) -> str:
        return self.message
