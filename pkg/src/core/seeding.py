"""随机数流

所有随机性都来自 SeedSequence(master_seed, spawn_key=(stream, member))，
成员 m 的随机数只取决于 (主种子, 流编号, m)，与线程调度无关。
"""

import numpy as np

PERTURBATION_STREAM = 0
LES_NOISE_STREAM = 1
FBM_SAMPLE_STREAM = 2
SHARED_PATH_STREAM = 3


def member_rng(seed: int, stream: int, member: int = 0) -> np.random.Generator:
    """返回 (seed, stream, member) 对应的独立随机数生成器"""
    sequence = np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(member)))
    return np.random.default_rng(sequence)
