"""Wrap parallel regions in loops over the threads they simulate.

Each region gets init/cond/inc blocks driving an induction variable: __tx over
warp lanes (trip = warp size) and __wid over warps (trip = blockDim.x / warp
size); flat mode uses a single __tx loop of trip blockDim.x. External edges
into the region are routed through init; the tail's exit runs through inc.

A region with several entry blocks (each activation enters at one of them and
runs a different suffix) is cloned per entry so every wrapped loop keeps a
single entry; instruction uids are preserved across clones, so execution
counts aggregate correctly.

Block-level barriers trailing a warp-level tail are hoisted below the lane
loop before wrapping: all lanes logically arrive before the block-wide
barrier, so it must sit outside the lane loop where the next-level pass can
see it as a region boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..dsl import nodes as n
from ..cfg import ir
from ..errors import TransformError
from .regions import ParallelRegion

TX = "__tx"
WID = "__wid"

_PREFIX = {ir.WARP: "intra_warp", ir.BLOCK: "inter_warp", "flat": "thread_loop"}


@dataclass
class WrapLoop:
    level: str
    var: str
    init: str
    cond: str
    inc: str
    entry: str
    trip: n.Expr
    region_index: int


@dataclass
class TransformMeta:
    mode: str = "hier"
    warp_size: int = 32
    regions: dict = field(default_factory=dict)        # level -> [ParallelRegion]
    membership: dict = field(default_factory=dict)     # level -> {bid: region index}
    wrap_loops: list = field(default_factory=list)     # [WrapLoop]
    peels: dict = field(default_factory=dict)          # bid -> level

    def in_level(self, level: str, bid: str) -> bool:
        return bid in self.membership.get(level, {})


def _copy_instr(instr: ir.Instr) -> ir.Instr:
    return replace(instr)


def _copy_term(term: ir.Terminator, remap: dict) -> ir.Terminator:
    if isinstance(term, ir.Br):
        return ir.Br(term.uid, remap.get(term.target, term.target))
    if isinstance(term, ir.CondBr):
        return ir.CondBr(term.uid, term.cond,
                         remap.get(term.then_target, term.then_target),
                         remap.get(term.else_target, term.else_target))
    return ir.Ret(term.uid)


def _hoist_trailing_block_barriers(cfg: ir.Cfg, tail: ir.Block) -> list[ir.Barrier]:
    """Remove block-level barriers from the tail's trailing barrier run."""
    run_start = len(tail.instrs)
    while run_start > 0 and isinstance(tail.instrs[run_start - 1], ir.Barrier):
        run_start -= 1
    hoisted = [b for b in tail.instrs[run_start:] if b.level == ir.BLOCK]
    if hoisted:
        kept = tail.instrs[:run_start] + [b for b in tail.instrs[run_start:] if b.level != ir.BLOCK]
        tail.instrs = kept
    return hoisted


def wrap_regions(cfg: ir.Cfg, regions: list[ParallelRegion], level: str,
                 var: str, trip: n.Expr, meta: TransformMeta,
                 hoist_block_barriers: bool = False) -> ir.Cfg:
    if var not in cfg.symbols.locals:
        cfg.symbols.locals[var] = n.I32
    meta.regions[level] = regions
    membership = meta.membership.setdefault(level, {})
    prefix = _PREFIX[level if meta.mode != "flat" else "flat"]

    for index, region in enumerate(regions):
        tail_blk = cfg.blocks[region.tail]
        term = tail_blk.term
        if isinstance(term, ir.CondBr):
            raise TransformError(f"region tail {region.tail} ends in a conditional branch")

        hoisted = _hoist_trailing_block_barriers(cfg, tail_blk) if hoist_block_barriers else []

        # where control continues once the loop is done
        if isinstance(term, ir.Ret):
            after_blk = cfg.fresh_block(f"{prefix}_done")
            after_blk.term = ir.Ret(term.uid)
            cfg.exit = after_blk.bid
            after = after_blk.bid
        else:
            after = term.target
        if hoisted:
            bar_blk = cfg.fresh_block(f"{prefix}_fence")
            bar_blk.instrs = hoisted
            bar_blk.term = ir.Br(cfg.new_uid(), after)
            after = bar_blk.bid

        entries = region.entries or [region.tail]
        if len(entries) == 1:
            copies = [(entries[0], {})]
        else:
            # clone the region body per entry block
            copies = []
            for k, entry in enumerate(sorted(entries)):
                remap = {m: f"{m}.c{k}" for m in region.blocks}
                for m in sorted(region.blocks):
                    clone = ir.Block(remap[m],
                                     [_copy_instr(i) for i in cfg.blocks[m].instrs],
                                     _copy_term(cfg.blocks[m].term, remap),
                                     cfg.blocks[m].peel_level)
                    cfg.add_block(clone)
                copies.append((entry, remap))

        for entry, remap in copies:
            entry_bid = remap.get(entry, entry)
            tail_bid = remap.get(region.tail, region.tail)

            init = cfg.fresh_block(f"{prefix}_init")
            cond = cfg.fresh_block(f"{prefix}_cond")
            inc = cfg.fresh_block(f"{prefix}_inc")
            init.instrs = [ir.Assign(cfg.new_uid(), n.VarTarget(var), n.IntLit(0))]
            init.term = ir.Br(cfg.new_uid(), cond.bid)
            cond.term = ir.CondBr(cfg.new_uid(),
                                  n.Binary("<", n.VarRef(var), trip),
                                  entry_bid, after)
            inc.instrs = [ir.Assign(cfg.new_uid(), n.VarTarget(var),
                                    n.Binary("+", n.VarRef(var), n.IntLit(1)))]
            inc.term = ir.Br(cfg.new_uid(), cond.bid)
            cfg.blocks[tail_bid].term = ir.Br(cfg.new_uid(), inc.bid)

            # route external edges aimed at this entry into the loop
            region_ids = set(remap.values()) if remap else set(region.blocks)
            loop_ids = {init.bid, cond.bid, inc.bid}
            for bid, blk in cfg.blocks.items():
                if bid in region_ids or bid in loop_ids or blk.term is None:
                    continue
                if entry in ir.successors(blk.term):
                    blk.term = ir.retarget(blk.term, entry, init.bid)

            for m in region_ids | loop_ids:
                membership[m] = index
            meta.wrap_loops.append(WrapLoop(level, var, init.bid, cond.bid, inc.bid,
                                            entry_bid, trip, index))

        if len(entries) > 1:
            for m in sorted(region.blocks):
                del cfg.blocks[m]

    for bid, blk in cfg.blocks.items():
        if blk.peel_level is not None:
            meta.peels[bid] = blk.peel_level
    return cfg


def delete_barriers(cfg: ir.Cfg, level: str) -> None:
    for blk in cfg.blocks.values():
        blk.instrs = [i for i in blk.instrs
                      if not (isinstance(i, ir.Barrier) and i.level == level)]


def assert_no_barriers(cfg: ir.Cfg) -> None:
    for bid, blk in cfg.blocks.items():
        for i in blk.instrs:
            if isinstance(i, ir.Barrier):
                raise TransformError(f"barrier survived wrapping in block {bid}")
