from .trace import ExecTrace
from .oracle import run_oracle, run_block
from .mpmd import BlockContext, run_mpmd
from .diff import DiffReport, compare_memory, diff_run

__all__ = ["ExecTrace", "run_oracle", "run_block", "BlockContext", "run_mpmd",
           "DiffReport", "compare_memory", "diff_run"]
