# bran_sim/config/logging_config.py

import logging
import sys
from logging.handlers import RotatingFileHandler

from bran_sim.config.settings import settings

"""
Logging for the toolkit:
- one named logger shared by every module
- timestamp, level, logger name, file, line and function on every record
- console output always, rotating file output when BRAN_SIM_LOG_FILE is set
"""

formatter = logging.Formatter("%(asctime)s [%(levelname)s] %(name)s [%(filename)s:%(lineno)d - %(funcName)s] - %(message)s")

# BRAN_SIM_LOG_LEVEL is one of DEBUG, INFO, WARNING, ERROR, CRITICAL
log_level = getattr(logging, settings.log_level.upper(), logging.INFO)

logger = logging.getLogger("bran_sim")
logger.setLevel(log_level)

# Console goes to stderr so CSV/JSON written to stdout stays clean
console_handler = logging.StreamHandler(sys.stderr)
console_handler.setLevel(log_level)
console_handler.setFormatter(formatter)
logger.addHandler(console_handler)

# File handler rotates at 10MB and keeps 5 backups
if settings.log_file:
    file_handler = RotatingFileHandler(settings.log_file, maxBytes=10 * 1024 * 1024, backupCount=5)
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(formatter)
    logger.addHandler(file_handler)

# Avoid duplicate records through the root logger
logger.propagate = False
