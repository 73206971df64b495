import logging

from src.infrastructure.logger_adapter.logger import configure_logging, init_logger
from src.presentation.cli.dependencies import setup_container


def test_configure_moves_file_handlers(tmp_path):
    logger = init_logger("condflow.tests.moved")
    configure_logging("DEBUG", tmp_path / "first")
    configure_logging("WARNING", tmp_path / "second")
    logger.warning("kept")
    logger.info("dropped")
    for handler in logger.handlers:
        handler.flush()

    files = [handler for handler in logger.handlers if isinstance(handler, logging.FileHandler)]
    assert len(files) == 1
    assert logger.level == logging.WARNING
    text = (tmp_path / "second" / "condflow.tests.moved.log").read_text()
    assert "kept" in text
    assert "dropped" not in text
    assert (tmp_path / "first" / "condflow.tests.moved.log").read_text() == ""


def test_explicit_directory_is_left_alone(tmp_path):
    logger = init_logger("condflow.tests.pinned", log_dir=tmp_path / "pinned")
    configure_logging("INFO", tmp_path / "elsewhere")
    assert not (tmp_path / "elsewhere" / "condflow.tests.pinned.log").exists()
    assert any(isinstance(handler, logging.FileHandler) for handler in logger.handlers)


def test_container_setup_applies_settings(settings):
    setup_container(settings)
    logger = init_logger("condflow.tests.container")
    logger.info("hello")
    for handler in logger.handlers:
        handler.flush()
    assert "hello" in (settings.LOG_DIR / "condflow.tests.container.log").read_text()
