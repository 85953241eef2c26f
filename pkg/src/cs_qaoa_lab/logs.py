"""Logging setup backed by rich."""

import logging

from rich.console import Console
from rich.logging import RichHandler

_HANDLER_NAME = "cs_qaoa_lab.rich"


def configure_logging(verbose: bool = False) -> logging.Logger:
    """Route the package logger through a RichHandler on stderr.

    Calling this more than once only updates the level.
    """
    logger = logging.getLogger("cs_qaoa_lab")
    logger.setLevel(logging.DEBUG if verbose else logging.INFO)

    if not any(h.get_name() == _HANDLER_NAME for h in logger.handlers):
        handler = RichHandler(
            console=Console(stderr=True),
            show_path=False,
            rich_tracebacks=False,
            markup=False,
        )
        handler.set_name(_HANDLER_NAME)
        handler.setFormatter(logging.Formatter("%(message)s", datefmt="[%X]"))
        logger.addHandler(handler)
        logger.propagate = False

    return logger
