import logging
import os
import sys
from datetime import datetime
from typing import Optional

from config import Config

FILE_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
CONSOLE_FORMAT = '%(levelname)s - %(name)s - %(message)s'


def log_file_path(day: Optional[datetime] = None) -> str:
    """Dated log file under Config.LOG_DIR"""
    return os.path.join(Config.LOG_DIR, f"polariscope_{(day or datetime.now()).strftime('%Y%m%d')}.log")


def _file_handler() -> Optional[logging.Handler]:
    try:
        os.makedirs(Config.LOG_DIR, exist_ok=True)
        handler = logging.FileHandler(log_file_path(), encoding='utf-8')
    except OSError as e:
        print(f"polariscope: file logging disabled ({e})", file=sys.stderr)
        return None
    handler.setLevel(logging.DEBUG)
    handler.setFormatter(logging.Formatter(FILE_FORMAT))
    return handler


def setup_logger(name: str = 'polariscope', level: Optional[int] = None) -> logging.Logger:
    """Attach the dated file handler and a stderr console handler to `name`.

    stdout carries the command reports, so console logging goes to stderr:
    warnings and up in development, errors only otherwise. Calling it twice
    for the same name adds nothing.
    """
    logger = logging.getLogger(name)
    logger.setLevel(Config.log_level() if level is None else level)
    if logger.handlers:
        return logger

    handler = _file_handler()
    if handler is not None:
        logger.addHandler(handler)

    console = logging.StreamHandler(sys.stderr)
    console.setLevel(logging.WARNING if Config.is_development() else logging.ERROR)
    console.setFormatter(logging.Formatter(CONSOLE_FORMAT))
    logger.addHandler(console)
    return logger
