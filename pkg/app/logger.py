"""
Логирование - стандартный logging с RichHandler.
Всё пишется в stderr: stdout занят JSONL/CSV выводом CLI.
"""
import logging

from rich.console import Console
from rich.logging import RichHandler

_ROOT = "app"


def setup_logging(level: str = "INFO") -> None:
    """Настраивает логгер пакета. Повторный вызов только меняет уровень."""
    logger = logging.getLogger(_ROOT)
    logger.setLevel(level.upper())
    if not any(isinstance(h, RichHandler) for h in logger.handlers):
        handler = RichHandler(
            console=Console(stderr=True),
            show_path=False,
            rich_tracebacks=True,
        )
        handler.setFormatter(logging.Formatter("%(name)s: %(message)s"))
        logger.addHandler(handler)
    logger.propagate = False


def get_logger(name: str) -> logging.Logger:
    """Логгер модуля внутри пространства имён app."""
    if not name.startswith(_ROOT):
        name = f"{_ROOT}.{name}"
    return logging.getLogger(name)
