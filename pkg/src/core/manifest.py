"""运行清单 (RunManifest)"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List

from .seeding import (
    FBM_SAMPLE_STREAM,
    LES_NOISE_STREAM,
    PERTURBATION_STREAM,
    SHARED_PATH_STREAM,
)
from .. import __version__
from ..utils.config import RunParameters
from ..utils.errors import ConfigError

# 每个命令消费的参数；下游命令要求这些参数与上游记录一致
BENCHMARK_KEYS = (
    'n_fine', 'n_coarse', 'dt', 't_end', 'beta', 'bc_left', 'bc_right',
    'ic_linear', 'ic_sine', 'ic_wavenumber', 'delta', 'filter_normalization',
    'filter_points', 'members', 'epsilon', 'seed',
)
CALIBRATE_KEYS = BENCHMARK_KEYS + ('hurst',)
SLES_KEYS = CALIBRATE_KEYS + (
    'r', 'j_min', 'j_max', 'wm_zero_adjust', 'wm_normalization',
    'les_members', 'noise_mode', 'blowup_threshold',
)
FBM_SAMPLE_KEYS = ('hurst', 'r', 'j_min', 'j_max', 'wm_zero_adjust',
                   'wm_normalization', 'dt', 't_end', 'seed')

STAGE_KEYS: Dict[str, tuple] = {
    'run-benchmark': BENCHMARK_KEYS,
    'calibrate': CALIBRATE_KEYS,
    'run-sles': SLES_KEYS,
    'compare': SLES_KEYS,
    'fbm-sample': FBM_SAMPLE_KEYS,
}


@dataclass
class RunManifest:
    """一次可复现运行的完整记录，不含时间戳"""
    tool_version: str = __version__
    parameters: Dict[str, Any] = field(default_factory=dict)
    seeds: Dict[str, Any] = field(default_factory=dict)
    stages: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    artifacts: Dict[str, str] = field(default_factory=dict)
    commands: List[str] = field(default_factory=list)

    def __post_init__(self):
        self.logger = logging.getLogger(__name__)

    def record(self, command: str, params: RunParameters, artifacts: Dict[str, str]):
        """
        记录一次命令执行

        Args:
            command: 命令名
            params: 本次使用的参数
            artifacts: 本次写出的产物 {名称: 相对路径}
        """
        flat = params.to_flat_dict()
        self.tool_version = __version__
        self.parameters = flat
        self.seeds = {
            'master': params.seed,
            'streams': {
                'perturbation': PERTURBATION_STREAM,
                'les_noise': LES_NOISE_STREAM,
                'fbm_sample': FBM_SAMPLE_STREAM,
                'shared_path': SHARED_PATH_STREAM,
            },
        }
        self.stages[command] = {key: flat[key] for key in STAGE_KEYS[command]}
        self.artifacts.update(artifacts)
        if command not in self.commands:
            self.commands.append(command)
        self.logger.info(f"清单已更新: {command}")

    def require_stage(self, upstream: str, params: RunParameters):
        """
        检查上游命令使用的参数与当前参数一致

        Raises:
            ConfigError: 参数不一致，需要重新运行上游命令
        """
        recorded = self.stages.get(upstream)
        if recorded is None:
            return
        current = params.to_flat_dict()
        changed = [key for key, value in recorded.items() if current.get(key) != value]
        if changed:
            detail = ", ".join(f"{key}: {recorded[key]} -> {current[key]}" for key in changed)
            raise ConfigError(
                f"参数与 {upstream} 生成产物时不一致 ({detail})，请重新运行 {upstream}",
                params.key_path(changed[0]),
            )

    def to_dict(self) -> Dict[str, Any]:
        return {
            'tool_version': self.tool_version,
            'parameters': self.parameters,
            'seeds': self.seeds,
            'stages': self.stages,
            'artifacts': self.artifacts,
            'commands': self.commands,
        }

    def save(self, filepath: str):
        """保存清单到JSON文件"""
        filepath = Path(filepath)
        filepath.parent.mkdir(parents=True, exist_ok=True)
        with open(filepath, 'w', encoding='utf-8') as f:
            json.dump(self.to_dict(), f, ensure_ascii=False, indent=2, sort_keys=True)
            f.write('\n')
        self.logger.info(f"清单已保存: {filepath}")

    @classmethod
    def load(cls, filepath: str) -> 'RunManifest':
        """从JSON文件加载清单"""
        with open(filepath, 'r', encoding='utf-8') as f:
            data = json.load(f)
        return cls(
            tool_version=data.get('tool_version', __version__),
            parameters=data.get('parameters', {}),
            seeds=data.get('seeds', {}),
            stages=data.get('stages', {}),
            artifacts=data.get('artifacts', {}),
            commands=data.get('commands', []),
        )

    @classmethod
    def load_or_create(cls, filepath: str) -> 'RunManifest':
        path = Path(filepath)
        return cls.load(path) if path.exists() else cls()
