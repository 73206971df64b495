import logging

from dataclasses import dataclass, field
from pathlib import Path


LOG_FORMAT = "[%(asctime)s-%(name)s-%(funcName)s-%(levelname)s] %(message)s"


@dataclass
class LoggingConfig:
    level: str | int = "INFO"
    log_dir: Path = Path("logs")
    managed: set[str] = field(default_factory=set)


_config = LoggingConfig()


def _file_handler(name: str, log_dir: Path, level: str | int) -> logging.FileHandler:
    log_dir.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(log_dir / f"{name}.log", encoding="utf-8")
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    return handler


def init_logger(name, level: str | int | None = None, to_stream: bool = True, log_dir: Path | None = None):
    logger = logging.getLogger(name)
    if logger.handlers:
        return logger
    level = level or _config.level
    logger.setLevel(level)

    if to_stream:
        stream_handler = logging.StreamHandler()
        stream_handler.setLevel(level)
        stream_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logger.addHandler(stream_handler)

    logger.addHandler(_file_handler(name, log_dir or _config.log_dir, level))
    if log_dir is None:
        _config.managed.add(name)

    return logger


def configure_logging(level: str | int, log_dir: Path) -> None:
    """Apply level and directory to every logger created with the defaults, and to later ones."""
    _config.level, _config.log_dir = level, Path(log_dir)
    for name in _config.managed:
        logger = logging.getLogger(name)
        logger.setLevel(level)
        for handler in list(logger.handlers):
            if isinstance(handler, logging.FileHandler):
                logger.removeHandler(handler)
                handler.close()
            else:
                handler.setLevel(level)
        logger.addHandler(_file_handler(name, _config.log_dir, level))
