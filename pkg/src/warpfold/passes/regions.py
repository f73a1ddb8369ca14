"""Discover barrier-delimited parallel regions at warp or block level.

A region is the set of blocks ending at a barrier-bearing tail block: the
tail plus every predecessor reachable without crossing another barrier, where
the tail post-dominates each member (so the region has a single exit through
the tail). Peel blocks never join a region at their own level, and regions
holding no computation (barrier-only glue between regions) are dropped.

At warp level both warp and block barriers end regions; at block level only
block barriers do. A warp-level peel block does belong to a block-level
region: the branch runs once per warp, inside the per-block loop.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from ..cfg import ir
from ..cfg.dom import DomTrees, compute_domtrees
from ..errors import TransformError


@dataclass
class ParallelRegion:
    level: str
    tail: str
    blocks: set = field(default_factory=set)
    entries: list = field(default_factory=list)   # region blocks with external in-edges


def _is_tail(blk: ir.Block, level: str) -> bool:
    if level == ir.WARP:
        return blk.has_barrier()
    return blk.has_barrier(ir.BLOCK)


def _peel_excluded(blk: ir.Block, level: str) -> bool:
    if blk.peel_level is None:
        return False
    if level == ir.WARP:
        return True
    return blk.peel_level == ir.BLOCK


def find_parallel_regions(cfg: ir.Cfg, level: str,
                          trees: DomTrees | None = None) -> list[ParallelRegion]:
    if trees is None:
        trees = compute_domtrees(cfg)
    pdt = trees.postdom
    preds = cfg.preds()

    regions = []
    for tail in cfg.blocks:
        blk = cfg.blocks[tail]
        if not _is_tail(blk, level):
            continue
        members = {tail}
        queue = deque(preds[tail])
        while queue:
            cur = queue.popleft()
            if cur in members:
                continue
            cur_blk = cfg.blocks[cur]
            if _is_tail(cur_blk, level):
                continue
            if _peel_excluded(cur_blk, level):
                continue
            if not pdt.dominates(tail, cur):
                continue
            members.add(cur)
            queue.extend(preds[cur])

        has_work = sum(cfg.blocks[m].real_instr_count() for m in members) > 0
        has_branch = any(isinstance(cfg.blocks[m].term, ir.CondBr) for m in members)
        if not has_work and not has_branch:
            continue  # barrier-only glue between regions

        entries = []
        for m in sorted(members):
            external = [p for p in preds[m] if p not in members]
            if external or m == cfg.entry:
                entries.append(m)
        regions.append(ParallelRegion(level, tail, members, entries))
    return regions


def verify_regions(cfg: ir.Cfg, regions: list, level: str) -> None:
    """Structural invariants for a clean (non-mutated) pipeline."""
    owner: dict[str, str] = {}
    for r in regions:
        for m in r.blocks:
            if m in owner:
                raise TransformError(
                    f"block {m} belongs to regions {owner[m]} and {r.tail} at {level} level")
            owner[m] = r.tail
    preds = cfg.preds()
    for bid, blk in cfg.blocks.items():
        if _peel_excluded(blk, level):
            if bid in owner:
                raise TransformError(f"peel block {bid} was assigned to a {level} region")
            continue
        if blk.real_instr_count() > 0 and bid not in owner:
            raise TransformError(f"block {bid} holds instructions but no {level} region owns it")
    for r in regions:
        for m in r.blocks:
            if m == r.tail:
                continue
            for s in cfg.succs(m):
                if s not in r.blocks:
                    raise TransformError(
                        f"region {r.tail}: block {m} exits the region other than through the tail")
        if not r.entries:
            # region reached only through the tail loop, e.g. the entry block
            raise TransformError(f"region {r.tail} has no entry block")
