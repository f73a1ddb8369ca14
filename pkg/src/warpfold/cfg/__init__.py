from . import ir
from .build import build_cfg, infer_kind
from .dom import DomTree, DomTrees, compute_dominators, compute_postdominators, compute_domtrees
from .loops import LoopInfo, canonicalize, find_loops, verify_canonical
from .dot import to_dot

__all__ = [
    "ir", "build_cfg", "infer_kind",
    "DomTree", "DomTrees", "compute_dominators", "compute_postdominators", "compute_domtrees",
    "LoopInfo", "canonicalize", "find_loops", "verify_canonical", "to_dot",
]
