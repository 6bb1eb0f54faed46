import sys

from loguru import logger

LOG_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} | {level} | {name}:{function} - {message}"


def setup_logger(level: str = "INFO", sink=sys.stderr) -> None:
    """Replaces loguru's default sink with a single formatted sink at the given level."""
    logger.remove()
    logger.add(sink, level=level.upper(), format=LOG_FORMAT)
