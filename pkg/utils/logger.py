import logging
import sys
from logging.handlers import RotatingFileHandler

from config import Config


def setup_logger(name="posepoison", log_file=None, level=None):
    """
    Sets up a logger with a console handler and, when a log file is
    configured, a rotating file handler.
    """
    log_file = Config.LOG_FILE if log_file is None else log_file
    level = level or getattr(logging, Config.LOG_LEVEL, logging.INFO)

    logger = logging.getLogger(name)
    logger.setLevel(level)

    # Add handlers if not already added
    if logger.handlers:
        return logger

    console_formatter = logging.Formatter(
        '%(asctime)s - %(levelname)s - %(name)s - %(message)s'
    )
    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setFormatter(console_formatter)
    console_handler.setLevel(level)
    logger.addHandler(console_handler)

    if log_file:
        file_formatter = logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
        )
        # Max size 5MB, keep 5 backups
        file_handler = RotatingFileHandler(log_file, maxBytes=5*1024*1024, backupCount=5)
        file_handler.setFormatter(file_formatter)
        file_handler.setLevel(level)
        logger.addHandler(file_handler)

    return logger
