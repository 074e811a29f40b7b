"""异常定义

PipelineError 及其子类携带命令行退出码，由 main.py 统一处理；
其余 ValueError 子类表示调用方违反了函数的前置条件。
"""


class PipelineError(Exception):
    """流水线异常基类"""

    exit_code = 1


class ConfigError(PipelineError):
    """配置文件解析或校验失败"""

    exit_code = 2

    def __init__(self, message: str, key_path: str = None):
        self.key_path = key_path
        if key_path:
            message = f"{key_path}: {message}"
        super().__init__(message)


class MissingArtifactError(PipelineError):
    """上游产物缺失"""

    exit_code = 3

    def __init__(self, artifact: str, prerequisite: str):
        self.artifact = artifact
        self.prerequisite = prerequisite
        super().__init__(
            f"缺少上游产物 {artifact}，请先运行: python main.py {prerequisite}"
        )


class NumericalError(PipelineError):
    """数值计算失败（发散、分解失败等）"""

    exit_code = 4


class BlowUpError(NumericalError):
    """解超过阈值，判定发散"""


class FactorizationError(NumericalError):
    """矩阵分解失败"""


class DegenerateFitError(NumericalError):
    """最小二乘法方程秩亏"""

    def __init__(self, message: str, condition_number: float):
        self.condition_number = condition_number
        super().__init__(f"{message} (Gram条件数: {condition_number:.3e})")


class InvalidOrderError(ValueError):
    """非法的多项式阶数或导数阶数"""


class ParameterError(ValueError):
    """参数超出允许范围"""


class PreconditionError(ValueError):
    """输入不满足前置条件"""


class InconsistentHistoryError(ValueError):
    """历史缓冲区与请求的时间不一致"""


class DegenerateSignalError(ValueError):
    """标准差为零，相关系数无定义"""

    def __init__(self, time_index: int):
        self.time_index = time_index
        super().__init__(f"时间步 {time_index} 处集合标准差在舍入误差内为零，相关系数无定义")


class InsufficientEnsembleError(ValueError):
    """集合成员数不足"""


class AlignmentError(ValueError):
    """集合之间时间步或网格不对齐"""


class ProvenanceMismatchError(PipelineError, ValueError):
    """模型来源参数与运行参数不一致"""

    exit_code = 2
