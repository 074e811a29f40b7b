"""核心功能模块"""

from .artifacts import ArtifactStore
from .calibration import Ensemble, SgsModel, calibrate, generate_ensemble
from .fbm import FbmConfig, cholesky_fbm, wm_fbm
from .filtering import GaussianFilter, compute_sgs, time_correlation
from .manifest import RunManifest
from .memory_solver import MemoryKernel, SemiImplicitStepper, SolverConfig, solve, step
from .sles import SlesConfig, rmse, solve_sles, summarize
from .spectral import ChebyshevGrid, build_grid, diff_matrix, quad_weights
from .workflow import PipelineWorkflow

__all__ = [
    'ArtifactStore',
    'ChebyshevGrid',
    'Ensemble',
    'FbmConfig',
    'GaussianFilter',
    'MemoryKernel',
    'PipelineWorkflow',
    'RunManifest',
    'SemiImplicitStepper',
    'SgsModel',
    'SlesConfig',
    'SolverConfig',
    'build_grid',
    'calibrate',
    'cholesky_fbm',
    'compute_sgs',
    'diff_matrix',
    'generate_ensemble',
    'quad_weights',
    'rmse',
    'solve',
    'solve_sles',
    'step',
    'summarize',
    'time_correlation',
    'wm_fbm',
]
