"""Exit-code contract: 0 success, 1 I/O, 2 config or usage, 3 checkpoint version mismatch."""

from collections.abc import Callable
from functools import wraps

import click

from pydantic import ValidationError

from src.domain.base.exceptions import DomainException
from src.domain.runs.exceptions import RunAlreadyExistsException
from src.domain.train.exceptions import TrainException
from src.infrastructure.storage.exceptions import StorageException
from src.logic.exceptions.base_exception import LogicException, NotFoundLogicException
from src.logic.exceptions.run_exceptions import CheckpointVersionMismatchLogicException

EXIT_OK = 0
EXIT_IO = 1
EXIT_CONFIG = 2
EXIT_VERSION = 3


class CliExit(click.ClickException):
    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


def validation_message(err: ValidationError) -> str:
    return "; ".join(
        f"{'.'.join(str(part) for part in item['loc']) or '<root>'}: {item['msg']}" for item in err.errors()
    )


def exit_code_for(err: Exception) -> int:
    if isinstance(err, CheckpointVersionMismatchLogicException):
        return EXIT_VERSION
    if isinstance(err, (StorageException, NotFoundLogicException, RunAlreadyExistsException, OSError)):
        return EXIT_IO
    if isinstance(err, TrainException) and not isinstance(err, ValueError):
        return EXIT_IO
    return EXIT_CONFIG


def handle_errors(func: Callable) -> Callable:
    @wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except ValidationError as err:
            raise CliExit(f"invalid config: {validation_message(err)}", EXIT_CONFIG)
        except (StorageException, DomainException, LogicException) as err:
            raise CliExit(err.title, exit_code_for(err))
        except ValueError as err:
            raise CliExit(str(err), EXIT_CONFIG)
        except OSError as err:
            raise CliExit(str(err), EXIT_IO)

    return wrapper
