"""Run CUDA-style SPMD kernels on CPU threads.

The compiler turns warp- and block-synchronous kernels into ordinary loop
nests (one CPU thread simulates a whole block); the runtime schedules blocks
over workers; a lockstep reference interpreter provides ground truth.
"""

from .config import LaunchConfig
from .dsl import KernelDef, KernelModule, parse_module, pretty_print
from .passes import MpmdProgram, TransformOptions, hybrid_transform, specialize
from .interp import ExecTrace, diff_run, run_oracle, run_mpmd, BlockContext
from .runtime import DeviceMemory, launch

__version__ = "0.1.0"

__all__ = [
    "LaunchConfig", "KernelDef", "KernelModule", "parse_module", "pretty_print",
    "MpmdProgram", "TransformOptions", "hybrid_transform", "specialize",
    "ExecTrace", "diff_run", "run_oracle", "run_mpmd", "BlockContext",
    "DeviceMemory", "launch", "__version__",
]
