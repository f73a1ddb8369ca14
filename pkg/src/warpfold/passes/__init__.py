from .warp_lower import lower_collectives, reduce_vote, shuffle_down, verify_hazard_barriers
from .barriers import (insert_boundary_barriers, insert_if_barriers, insert_for_barriers,
                       purity_split_cond, insert_extra_barriers, verify_fences)
from .split import split_at_barriers
from .regions import ParallelRegion, find_parallel_regions, verify_regions
from .wrap import TX, WID, TransformMeta, WrapLoop, wrap_regions, delete_barriers
from .replicate import ReplicatedLocal, classify_locals, replicate_locals
from .pipeline import (MpmdProgram, TransformOptions, hybrid_transform, specialize,
                       prepare_kernel_cfg, resolve_mode, original_uids)

__all__ = [
    "lower_collectives", "reduce_vote", "shuffle_down", "verify_hazard_barriers",
    "insert_boundary_barriers", "insert_if_barriers", "insert_for_barriers",
    "purity_split_cond", "insert_extra_barriers", "verify_fences",
    "split_at_barriers",
    "ParallelRegion", "find_parallel_regions", "verify_regions",
    "TX", "WID", "TransformMeta", "WrapLoop", "wrap_regions", "delete_barriers",
    "ReplicatedLocal", "classify_locals", "replicate_locals",
    "MpmdProgram", "TransformOptions", "hybrid_transform", "specialize",
    "prepare_kernel_cfg", "resolve_mode", "original_uids",
]
