"""Split blocks so every barrier ends its block.

After this pass a barrier is always the last non-terminator instruction of
its block, and a barrier-terminated block never ends in a conditional branch
(the branch is per-thread work for the next region, so it gets its own
block). Idempotent: blocks already in this form are untouched.
"""

from __future__ import annotations

from ..cfg import ir


def split_at_barriers(cfg: ir.Cfg) -> ir.Cfg:
    for bid in list(cfg.blocks):
        blk = cfg.blocks[bid]
        cut_points = [idx + 1 for idx, instr in enumerate(blk.instrs)
                      if isinstance(instr, ir.Barrier)]
        if not cut_points:
            continue
        pieces = []
        start = 0
        for cut in cut_points:
            pieces.append(blk.instrs[start:cut])
            start = cut
        tail_instrs = blk.instrs[start:]
        needs_tail_block = bool(tail_instrs) or isinstance(blk.term, ir.CondBr)
        if len(pieces) == 1 and not needs_tail_block:
            continue  # already barrier-terminated with a plain branch

        term = blk.term
        blk.instrs = pieces[0]
        prev = blk
        for piece in pieces[1:]:
            seg = cfg.fresh_block(f"{bid}.s")
            seg.instrs = piece
            prev.term = ir.Br(cfg.new_uid(), seg.bid)
            prev = seg
        if needs_tail_block:
            seg = cfg.fresh_block(f"{bid}.s")
            seg.instrs = tail_instrs
            prev.term = ir.Br(cfg.new_uid(), seg.bid)
            prev = seg
        prev.term = term
        if isinstance(term, ir.Ret) and cfg.exit == bid:
            cfg.exit = prev.bid
    return cfg
