import os
import logging
import time
from datetime import datetime
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

LOG_LEVELS = {
    "DEBUG": logging.DEBUG,
    "INFO": logging.INFO,
    "WARNING": logging.WARNING,
    "ERROR": logging.ERROR,
    "CRITICAL": logging.CRITICAL
}


def cleanup_old_logs(log_dir: str, days: int = 7):
    """
    Remove command log files older than the retention window.

    Args:
        log_dir: log directory
        days: retention in days (default 7)
    """
    if not os.path.exists(log_dir):
        return

    cutoff_time = time.time() - (days * 24 * 60 * 60)

    for log_file in Path(log_dir).glob("*.log"):
        if log_file.stat().st_mtime < cutoff_time:
            try:
                log_file.unlink()
            except OSError:
                pass


class CustomFormatter(logging.Formatter):
    """
    Formatter with millisecond timestamps and a one-letter level code.
    """
    LEVEL_MAP = {
        'DEBUG': 'D',
        'INFO': 'I',
        'WARNING': 'W',
        'ERROR': 'E',
        'CRITICAL': 'C'
    }

    def format(self, record):
        record.levelname_short = self.LEVEL_MAP.get(record.levelname, record.levelname[0])
        return super().format(record)

    def formatTime(self, record, datefmt=None):
        ct = datetime.fromtimestamp(record.created)
        s = ct.strftime(datefmt or "%Y-%m-%d %H:%M:%S")
        return f"{s}.{int(record.msecs):03d}"


def setup_logger(name: str = None, command_name: str = None) -> logging.Logger:
    """
    Configure a logger from LOG_LEVEL.

    Console output goes to stderr; stdout is reserved for command results.
    When MOG_LOG_DIR is set and a command name is given, records are also
    appended to <MOG_LOG_DIR>/<command>-YYYYMMDD.log.

    Args:
        name: logger name
        command_name: CLI command (graph, simulate, check-assumption, ...)

    Returns:
        configured logger
    """
    log_level_str = os.getenv("LOG_LEVEL", "INFO").strip().upper()
    log_level = LOG_LEVELS.get(log_level_str, logging.INFO)

    logger = logging.getLogger(name)
    logger.setLevel(log_level)

    # no duplicate handlers on repeated calls
    if logger.handlers:
        logger.handlers.clear()

    formatter = CustomFormatter('%(asctime)s [%(levelname_short)s] : %(message)s',
                                datefmt='%Y-%m-%d %H:%M:%S')

    console_handler = logging.StreamHandler()
    console_handler.setLevel(log_level)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    log_dir = os.getenv("MOG_LOG_DIR")
    if command_name and log_dir:
        os.makedirs(log_dir, exist_ok=True)
        cleanup_old_logs(log_dir, days=int(os.getenv("LOG_RETENTION_DAYS", "7")))

        log_date = datetime.now().strftime("%Y%m%d")
        log_filepath = os.path.join(log_dir, f"{command_name}-{log_date}.log")

        file_handler = logging.FileHandler(log_filepath, mode='a', encoding='utf-8')
        file_handler.setLevel(log_level)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    logger.propagate = False

    return logger


def get_logger(name: str = None, command_name: str = None) -> logging.Logger:
    """
    Return a logger, re-reading the environment on every call so that a
    changed LOG_LEVEL takes effect.

    Args:
        name: logger name
        command_name: CLI command name

    Returns:
        logger
    """
    return setup_logger(name, command_name)
