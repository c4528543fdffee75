# -*- coding: UTF-8 -*-
"""
@Project    : PyFirstHit
@File       : logsRecorder.py
@Description: 日志记录器：控制台级别与轮转文件日志
@Version    : v0.1.0
@Dependencies:
    - loguru
@Changelog  :
    - v0.0.0: Initial version, rotating file sink.
    - v0.1.0: Console level setup for the command line, sink removal.
"""
import datetime
import os
import sys
from typing import Optional

from loguru import logger

from ..utils.filePathHelper import EnsureFolders, NoDuplicateFile

CONSOLE_FORMAT = "<green>{time:HH:mm:ss}</green> | <level>{level: <7}</level> | {message}"


def SetConsoleLevel(verbosity: int = 0) -> int:
    """
    Replace loguru's default stderr sink by one at WARNING, INFO (-v) or DEBUG (-vv).

    Returns:
        int: id of the new sink.
    """
    level = "WARNING" if verbosity <= 0 else "INFO" if verbosity == 1 else "DEBUG"
    logger.remove()
    return logger.add(sys.stderr, level=level, format=CONSOLE_FORMAT)


class LogsRecorder:
    """
    Rotating log file for a run. The file name includes the program name and a timestamp and never
    overwrites an existing log.

    Attributes:
        directory (str): The directory where log files will be stored.
        log_filename (str): The base name of the log file.
        log_filepath (str): The full path of the log file.
        logger_id (int): loguru sink id, used by close().
    """

    def __init__(self, log_dir: str = './data/logs/', log_name: Optional[str] = None, level: str = "DEBUG") -> None:
        """
        Args:
            log_dir (str): The directory where the log file will be saved.
            log_name (Optional[str]): Base name of the log file, program name plus timestamp when omitted.
            level (str): Minimum level written to the file.
        """
        self.directory: str = log_dir
        self.log_filename: str = log_name or os.path.basename(sys.argv[0]).split(".")[
            0] + "--" + datetime.datetime.now().strftime('%Y-%m-%d_%H-%M-%S-%f')
        EnsureFolders(self.directory)
        self.log_filepath: str = NoDuplicateFile(self.directory, self.log_filename, file_extension='.log')
        self.logger_id: int = self.init_logger(level)

    def init_logger(self, level: str = "DEBUG") -> int:
        """
        Add the file sink: rotate at 10 MB, keep 60 days, zip rotated files.

        Returns:
            int: The loguru sink id.
        """
        log_id: int = logger.add(self.log_filepath,
                                 level=level,
                                 rotation="10 MB",
                                 retention="60 days",
                                 compression="zip",
                                 enqueue=True)
        logger.debug(f'Logger initialized. Logs will be saved to: {self.log_filepath}')
        return log_id

    def close(self) -> None:
        """Flush and detach the file sink."""
        logger.remove(self.logger_id)
