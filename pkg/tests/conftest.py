"""测试公共夹具"""

import sys
from pathlib import Path

import numpy as np
import pytest
import yaml

sys.path.insert(0, str(Path(__file__).parent.parent))

from src.core.spectral import build_grid  # noqa: E402

# 端到端测试用的小规模配置，几秒内跑完
SMALL_CONFIG = {
    'grid': {'n_fine': 16, 'n_coarse': 8},
    'solver': {'dt': 0.01, 't_end': 0.05, 'beta': 2.0},
    'filter': {'delta': 0.05, 'filter_points': 256},
    'fbm': {'hurst': 0.75, 'j_min': -12, 'j_max': 12},
    'ensemble': {'members': 4, 'epsilon': 0.05},
    'sles': {'les_members': 4},
    'diagnostics': {'max_lag_steps': 3, 'corr_x': 0.5},
    'run': {'seed': 7, 'workers': 1},
}


@pytest.fixture
def coarse_grid():
    return build_grid(8)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_config(tmp_path):
    """写出小规模配置文件，返回 (配置路径, 输出目录)"""
    out_dir = tmp_path / 'run'
    document = dict(SMALL_CONFIG)
    document['output'] = {'out_dir': str(out_dir), 'write_fine_trajectories': True}
    document['logging'] = {'level': 'WARNING', 'file': str(tmp_path / 'pipeline.log')}
    path = tmp_path / 'config.yaml'
    with open(path, 'w', encoding='utf-8') as f:
        yaml.safe_dump(document, f, allow_unicode=True)
    return path, out_dir
