"""日志模块

流水线各模块通过 logging.getLogger(__name__) 取得 "src" 下的子记录器，
handler 只挂在包根记录器上。每条记录带有当前命令和随机种子，
同一输出目录下多次运行的日志可以按命令区分。
"""

import logging
import sys
from pathlib import Path
from typing import Optional

from .errors import ConfigError

PACKAGE_LOGGER = "src"
DEFAULT_FORMAT = (
    "%(asctime)s - %(name)s - %(levelname)s - [%(command)s seed=%(seed)s] %(message)s"
)
LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL')


class RunContextFilter(logging.Filter):
    """给每条记录注入 command 和 seed 字段"""

    def __init__(self, command: str = '-', seed: Optional[int] = None):
        super().__init__()
        self.command = command
        self.seed = '-' if seed is None else seed

    def filter(self, record: logging.LogRecord) -> bool:
        record.command = self.command
        record.seed = self.seed
        return True


def setup_logger(
    name: str = PACKAGE_LOGGER,
    level: str = "INFO",
    log_file: Optional[str] = None,
    log_format: Optional[str] = None,
    command: str = '-',
    seed: Optional[int] = None
) -> logging.Logger:
    """
    设置日志记录器

    同一进程内重复调用（例如依次执行多个命令）会替换已有的 handler，
    日志总是写到最近一次配置的文件。

    Args:
        name: 日志记录器名称
        level: 日志级别 (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_file: 日志文件路径
        log_format: 日志格式，可使用 %(command)s 与 %(seed)s
        command: 当前子命令
        seed: 本次运行的基础种子

    Returns:
        配置好的Logger对象

    Raises:
        ConfigError: 未知的日志级别
    """
    level_name = str(level).upper()
    if level_name not in LEVELS:
        raise ConfigError(f"未知的日志级别: {level}", 'logging.level')

    logger = logging.getLogger(name)
    logger.setLevel(level_name)

    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    formatter = logging.Formatter(log_format or DEFAULT_FORMAT)
    context = RunContextFilter(command, seed)

    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setFormatter(formatter)
    console_handler.addFilter(context)
    logger.addHandler(console_handler)

    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)

        file_handler = logging.FileHandler(log_path, encoding='utf-8')
        file_handler.setFormatter(formatter)
        file_handler.addFilter(context)
        logger.addHandler(file_handler)

    return logger
