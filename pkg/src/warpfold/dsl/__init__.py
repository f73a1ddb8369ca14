from .nodes import KernelDef, KernelModule, Param, uses_warp_features
from .parser import parse_module
from .printer import pretty_print
from .checker import check_kernel, check_module, SymbolTable

__all__ = [
    "KernelDef", "KernelModule", "Param", "SymbolTable",
    "parse_module", "pretty_print", "check_kernel", "check_module",
    "uses_warp_features",
]
