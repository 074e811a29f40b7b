"""配置管理模块"""

import os
import yaml
from dataclasses import dataclass, fields, asdict, replace
from pathlib import Path
from typing import Dict, Any, Optional
from dotenv import load_dotenv

from .errors import ConfigError

# 加载环境变量
load_dotenv()


class Config:
    """配置类"""

    def __init__(self, config_dict: Dict[str, Any]):
        self._config = config_dict

    def get(self, key: str, default=None):
        """获取配置项，支持点号分隔的嵌套键"""
        keys = key.split('.')
        value = self._config

        for k in keys:
            if isinstance(value, dict):
                value = value.get(k)
                if value is None:
                    return default
            else:
                return default

        return value

    def __getitem__(self, key):
        return self.get(key)

    def __repr__(self):
        return f"Config({self._config})"

    def to_dict(self) -> Dict[str, Any]:
        return self._config


def load_config(config_path: str = None) -> Config:
    """
    加载配置文件

    YAML 是 JSON 的超集，因此 manifest.json 也可以直接作为配置文件。

    Args:
        config_path: 配置文件路径，默认为项目根目录的config/config.yaml

    Returns:
        Config对象

    Raises:
        FileNotFoundError: 文件不存在
        ConfigError: 文件不是合法的YAML映射
    """
    if config_path is None:
        project_root = Path(__file__).parent.parent.parent
        config_path = project_root / "config" / "config.yaml"

    config_path = Path(config_path)

    if not config_path.exists():
        raise FileNotFoundError(f"配置文件不存在: {config_path}")

    try:
        with open(config_path, 'r', encoding='utf-8') as f:
            config_dict = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"YAML解析失败: {e}") from e

    if not isinstance(config_dict, dict):
        raise ConfigError("配置文件顶层必须是键值映射")

    # 替换环境变量
    config_dict = _replace_env_vars(config_dict)

    return Config(config_dict)


def _replace_env_vars(config_dict: Dict) -> Dict:
    """递归替换配置中的环境变量"""
    for key, value in config_dict.items():
        if isinstance(value, dict):
            config_dict[key] = _replace_env_vars(value)
        elif isinstance(value, str) and value.startswith('${') and value.endswith('}'):
            # ${VAR} 或 ${VAR:-默认值}
            env_key, _, default = value[2:-1].partition(':-')
            config_dict[key] = os.getenv(env_key, default if default else value)

    return config_dict


# 参数表: 键 -> (所属配置节, 类型)
# 叶子键名在各节之间唯一，嵌套文档可以无歧义地展平
PARAMETER_SECTIONS: Dict[str, str] = {
    'n_fine': 'grid',
    'n_coarse': 'grid',
    'dt': 'solver',
    't_end': 'solver',
    'beta': 'solver',
    'bc_left': 'solver',
    'bc_right': 'solver',
    'ic_linear': 'solver',
    'ic_sine': 'solver',
    'ic_wavenumber': 'solver',
    'delta': 'filter',
    'filter_normalization': 'filter',
    'filter_points': 'filter',
    'hurst': 'fbm',
    'r': 'fbm',
    'j_min': 'fbm',
    'j_max': 'fbm',
    'wm_zero_adjust': 'fbm',
    'wm_normalization': 'fbm',
    'members': 'ensemble',
    'epsilon': 'ensemble',
    'les_members': 'sles',
    'noise_mode': 'sles',
    'blowup_threshold': 'sles',
    'corr_x': 'diagnostics',
    'max_lag_steps': 'diagnostics',
    'seed': 'run',
    'workers': 'run',
    'out_dir': 'output',
    'write_fine_trajectories': 'output',
}

# 不属于运行参数的配置节
AMBIENT_SECTIONS = {'logging'}


@dataclass(frozen=True)
class RunParameters:
    """一次流水线运行的完整参数集（即 RunManifest 中的 parameters）"""

    n_fine: int = 64
    n_coarse: int = 16
    dt: float = 1e-3
    t_end: float = 1.0
    beta: float = 2.0
    bc_left: float = -1.0
    bc_right: float = 1.0
    ic_linear: float = 0.53
    ic_sine: float = 0.47
    ic_wavenumber: float = 1.5
    delta: float = 0.01
    filter_normalization: str = 'unit_mass'
    filter_points: int = 4096
    hurst: float = 0.75
    r: float = 0.9
    j_min: int = -48
    j_max: int = 48
    wm_zero_adjust: bool = True
    wm_normalization: str = 'ensemble'
    members: int = 64
    epsilon: float = 0.01
    les_members: int = 64
    noise_mode: str = 'per-realization-path'
    blowup_threshold: float = 10.0
    corr_x: float = 0.0
    max_lag_steps: int = 500
    seed: int = 20090113
    workers: int = 1
    out_dir: str = 'output/run'
    write_fine_trajectories: bool = True

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def key_path(self, key: str) -> str:
        return f"{PARAMETER_SECTIONS[key]}.{key}"

    def to_flat_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def with_overrides(self, **overrides) -> 'RunParameters':
        """返回应用了覆盖值并重新校验的新参数集"""
        overrides = {k: v for k, v in overrides.items() if v is not None}
        params = replace(self, **overrides)
        params.validate()
        return params

    def validate(self):
        """
        检查参数取值范围

        Raises:
            ConfigError: 带有点号键路径的错误
        """
        def fail(key, message):
            raise ConfigError(message, self.key_path(key))

        if self.n_fine < 2:
            fail('n_fine', "多项式阶数必须 >= 2")
        if self.n_coarse < 2:
            fail('n_coarse', "多项式阶数必须 >= 2")
        if self.dt <= 0:
            fail('dt', "时间步长必须 > 0")
        if self.t_end < self.dt:
            fail('t_end', "终止时间必须 >= dt")
        if abs(self.t_end / self.dt - self.n_steps) > 1e-9 * max(1, self.n_steps):
            fail('t_end', "t_end/dt 必须为整数步数")
        if self.beta <= 0:
            fail('beta', "记忆核指数必须 > 0")
        if self.delta <= 0:
            fail('delta', "滤波宽度必须 > 0")
        if self.filter_normalization not in ('unit_mass', 'paper'):
            fail('filter_normalization', "只支持 unit_mass 或 paper")
        if self.filter_points < 16:
            fail('filter_points', "卷积求积点数至少为 16")
        if not 0 < self.hurst < 1:
            fail('hurst', "Hurst参数必须在 (0, 1) 内")
        if not 0 < self.r < 1:
            fail('r', "W-M 底数必须在 (0, 1) 内")
        if not self.j_min <= 0 <= self.j_max:
            fail('j_min', "截断范围必须满足 j_min <= 0 <= j_max")
        if self.wm_normalization not in ('ensemble', 'analytic', 'none'):
            fail('wm_normalization', "只支持 ensemble / analytic / none")
        if self.members < 2:
            fail('members', "集合成员数必须 >= 2")
        if self.epsilon < 0:
            fail('epsilon', "扰动幅度必须 >= 0")
        if self.les_members < 1:
            fail('les_members', "LES 集合成员数必须 >= 1")
        if self.noise_mode not in ('per-realization-path', 'shared-path'):
            fail('noise_mode', "只支持 per-realization-path 或 shared-path")
        if self.blowup_threshold <= 0:
            fail('blowup_threshold', "发散阈值必须 > 0")
        if not -1 <= self.corr_x <= 1:
            fail('corr_x', "相关诊断位置必须在 [-1, 1] 内")
        if self.max_lag_steps < 0:
            fail('max_lag_steps', "最大滞后步数必须 >= 0")
        if self.workers < 1:
            fail('workers', "线程数必须 >= 1")


def flatten_config(config_dict: Dict[str, Any]) -> Dict[str, Any]:
    """
    把配置文档展平成 {参数名: 值}

    支持三种形式：按节嵌套的YAML、已经展平的文档、manifest.json。

    Raises:
        ConfigError: 出现未知键或键放错了配置节
    """
    if 'parameters' in config_dict and isinstance(config_dict['parameters'], dict):
        # manifest.json
        return dict(config_dict['parameters'])

    flat: Dict[str, Any] = {}
    for key, value in config_dict.items():
        if key in AMBIENT_SECTIONS:
            continue
        if isinstance(value, dict):
            for leaf, leaf_value in value.items():
                path = f"{key}.{leaf}"
                if leaf not in PARAMETER_SECTIONS:
                    raise ConfigError("未知配置项", path)
                if PARAMETER_SECTIONS[leaf] != key:
                    raise ConfigError(
                        f"配置项应位于 {PARAMETER_SECTIONS[leaf]} 节", path
                    )
                flat[leaf] = leaf_value
        elif key in PARAMETER_SECTIONS:
            flat[key] = value
        else:
            raise ConfigError("未知配置项", key)

    return flat


def _coerce(key: str, value: Any, target_type: type) -> Any:
    path = f"{PARAMETER_SECTIONS[key]}.{key}"
    if target_type is bool:
        if isinstance(value, bool):
            return value
        raise ConfigError(f"需要布尔值，得到 {value!r}", path)
    if target_type is int:
        if isinstance(value, bool) or not isinstance(value, (int, float)) \
                or float(value) != int(value):
            raise ConfigError(f"需要整数，得到 {value!r}", path)
        return int(value)
    if target_type is float:
        if isinstance(value, bool):
            raise ConfigError(f"需要实数，得到 {value!r}", path)
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"需要实数，得到 {value!r}", path) from None
    if not isinstance(value, str):
        raise ConfigError(f"需要字符串，得到 {value!r}", path)
    return value


def build_parameters(config: Optional[Config] = None) -> RunParameters:
    """
    从配置构建并校验运行参数

    Args:
        config: Config对象，None表示全部使用默认值

    Returns:
        RunParameters

    Raises:
        ConfigError: 未知键、类型错误或取值越界
    """
    flat = flatten_config(config.to_dict()) if config is not None else {}
    types = {f.name: f.type for f in fields(RunParameters)}
    type_map = {'int': int, 'float': float, 'str': str, 'bool': bool}

    values = {}
    for key, value in flat.items():
        if key not in types:
            raise ConfigError("未知配置项", key)
        target = types[key]
        target = type_map.get(target, target) if isinstance(target, str) else target
        values[key] = _coerce(key, value, target)

    params = RunParameters(**values)
    params.validate()
    return params
