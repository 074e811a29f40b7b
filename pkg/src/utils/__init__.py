"""工具模块"""

from .config import Config, RunParameters, build_parameters, load_config
from .errors import (
    ConfigError,
    MissingArtifactError,
    NumericalError,
    PipelineError,
)
from .logger import setup_logger

__all__ = [
    'Config',
    'RunParameters',
    'build_parameters',
    'load_config',
    'setup_logger',
    'PipelineError',
    'ConfigError',
    'MissingArtifactError',
    'NumericalError',
]
