"""产物读写（CSV / JSON）"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Sequence

import numpy as np
import pandas as pd

from .spectral import ChebyshevGrid
from ..utils.errors import AlignmentError, MissingArtifactError

# 产物名 -> (文件名, 生成它的命令)
ARTIFACTS: Dict[str, tuple] = {
    'fine_trajectories': ('fine_trajectories.csv', 'run-benchmark'),
    'sgs_fields': ('sgs_fields.csv', 'run-benchmark'),
    'filtered_coarse': ('filtered_coarse.csv', 'run-benchmark'),
    'raw_coarse': ('raw_coarse.csv', 'run-benchmark'),
    'sgs_correlation': ('sgs_correlation.csv', 'run-benchmark'),
    'drift': ('drift.json', 'calibrate'),
    'sigma': ('sigma.csv', 'calibrate'),
    'les_trajectories': ('les_trajectories.csv', 'run-sles'),
    'baseline_trajectory': ('baseline_trajectory.csv', 'compare'),
    'error': ('error.csv', 'compare'),
    'summary': ('summary.json', 'compare'),
    'fbm_paths': ('fbm_paths.csv', 'fbm-sample'),
    'manifest': ('manifest.json', None),
}


class ArtifactStore:
    """运行目录中的产物存储"""

    def __init__(self, out_dir: str):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.logger = logging.getLogger(__name__)

    def path(self, name: str) -> Path:
        return self.out_dir / ARTIFACTS[name][0]

    def relative(self, name: str) -> str:
        return ARTIFACTS[name][0]

    def require(self, name: str) -> Path:
        """
        返回已存在产物的路径

        Raises:
            MissingArtifactError: 产物不存在，提示应先运行的命令
        """
        path = self.path(name)
        if not path.exists():
            raise MissingArtifactError(str(path), ARTIFACTS[name][1])
        return path

    # ---------- CSV ----------

    def _write_frame(self, name: str, df: pd.DataFrame) -> str:
        path = self.path(name)
        df.to_csv(path, index=False)
        self.logger.info(f"已写入 {path} ({len(df)} 行)")
        return self.relative(name)

    def _read_frame(self, name: str) -> pd.DataFrame:
        path = self.require(name)
        self.logger.info(f"读取 {path}")
        return pd.read_csv(path, float_precision='round_trip')

    def write_fields(
        self,
        name: str,
        grid: ChebyshevGrid,
        dt: float,
        values: np.ndarray,
        with_member: bool = True
    ) -> str:
        """
        写出时空场，长表格式 (t, x, value[, member])

        Args:
            name: 产物名
            grid: 网格
            dt: 时间步
            values: 形状 (M, K+1, n+1)，或 with_member=False 时 (K+1, n+1)
        """
        values = np.asarray(values, dtype=float)
        if not with_member:
            values = values[None]
        members, n_times, n_nodes = values.shape
        times = np.arange(n_times) * dt

        data = {
            't': np.tile(np.repeat(times, n_nodes), members),
            'x': np.tile(grid.nodes, members * n_times),
            'value': values.ravel(),
        }
        if with_member:
            data['member'] = np.repeat(np.arange(members), n_times * n_nodes)
        return self._write_frame(name, pd.DataFrame(data))

    def read_fields(self, name: str, grid: ChebyshevGrid, with_member: bool = True) -> np.ndarray:
        """
        读回 write_fields 写出的场

        Returns:
            形状 (M, K+1, n+1) 的数组（with_member=False 时 M=1）

        Raises:
            AlignmentError: 文件中的节点与网格不一致
        """
        df = self._read_frame(name)
        if with_member:
            df = df.sort_values(['member', 't'], kind='stable')
            members = df['member'].nunique()
        else:
            members = 1
        n_nodes = grid.size
        if len(df) % (members * n_nodes):
            raise AlignmentError(f"{name} 的行数与网格节点数 {n_nodes} 不匹配")
        n_times = len(df) // (members * n_nodes)

        nodes = df['x'].to_numpy().reshape(members * n_times, n_nodes)
        if not np.allclose(nodes, grid.nodes[None, :], rtol=0.0, atol=1e-14):
            raise AlignmentError(f"{name} 中的节点与 n={grid.n} 的网格不一致")
        return df['value'].to_numpy().reshape(members, n_times, n_nodes)

    def write_profile(self, name: str, columns: Dict[str, Sequence]) -> str:
        return self._write_frame(name, pd.DataFrame(columns))

    def read_profile(self, name: str) -> pd.DataFrame:
        return self._read_frame(name)

    def write_error(self, grid: ChebyshevGrid, dt: float, error: np.ndarray,
                    error_vs_raw: np.ndarray) -> str:
        n_times, n_nodes = error.shape
        df = pd.DataFrame({
            't': np.repeat(np.arange(n_times) * dt, n_nodes),
            'x': np.tile(grid.nodes, n_times),
            'error_vs_filtered': error.ravel(),
            'error_vs_raw': error_vs_raw.ravel(),
        })
        return self._write_frame('error', df)

    def write_paths(self, times: np.ndarray, paths: np.ndarray) -> str:
        n_paths, n_times = paths.shape
        df = pd.DataFrame({
            't': np.tile(times, n_paths),
            'value': paths.ravel(),
            'path': np.repeat(np.arange(n_paths), n_times),
        })
        return self._write_frame('fbm_paths', df)

    # ---------- JSON ----------

    def write_json(self, name: str, data: Dict[str, Any]) -> str:
        path = self.path(name)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(data, f, ensure_ascii=False, indent=2, sort_keys=True)
            f.write('\n')
        self.logger.info(f"已写入 {path}")
        return self.relative(name)

    def read_json(self, name: str) -> Dict[str, Any]:
        path = self.require(name)
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)

    def existing(self) -> List[str]:
        return [name for name in ARTIFACTS if self.path(name).exists()]
