"""Replicate locals that cross region boundaries and resolve thread indices.

After wrapping, a local written in one region and read in another no longer
refers to a single simulated thread's value, so it becomes an array indexed by
the loop variables: warp-size extent when all its uses sit inside one
block-level region, block-size extent when it crosses block-level regions or
feeds a block-level peel. Peel branches read thread 0's slot.

The same pass substitutes away thread builtins: threadIdx.x becomes
__wid * warpSize + __tx (hierarchical) or __tx (flat), and the lane index of
lowered collectives becomes __tx.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..dsl import nodes as n
from ..cfg import ir
from .wrap import TX, WID, TransformMeta


@dataclass(frozen=True)
class ReplicatedLocal:
    name: str
    kind: str
    extent: str  # warp | block


def _local_names(instr_or_expr, symbols, acc: set):
    def from_expr(e):
        for sub in n.walk_exprs(e):
            if isinstance(sub, n.VarRef) and sub.name in symbols.locals:
                acc.add(sub.name)

    if isinstance(instr_or_expr, ir.Assign):
        t = instr_or_expr.target
        if isinstance(t, n.VarTarget) and t.name in symbols.locals:
            acc.add(t.name)
        if isinstance(t, n.IndexTarget):
            from_expr(t.index)
        from_expr(instr_or_expr.expr)
    elif isinstance(instr_or_expr, ir.CondBr):
        from_expr(instr_or_expr.cond)


def classify_locals(cfg: ir.Cfg, meta: TransformMeta) -> dict:
    """Decide scalar vs warp-extent vs block-extent for every local."""
    warp_m = meta.membership.get(ir.WARP, {})
    block_m = meta.membership.get(ir.BLOCK, {})
    occurrences: dict[str, list] = {}
    for bid, blk in cfg.blocks.items():
        names: set = set()
        for instr in blk.instrs:
            _local_names(instr, cfg.symbols, names)
        _local_names(blk.term, cfg.symbols, names)
        for name in names:
            occurrences.setdefault(name, []).append(bid)

    replicated = {}
    for name in sorted(occurrences):
        if name in (TX, WID):
            continue
        warp_ids, block_ids = set(), set()
        in_warp_peel = in_block_peel = False
        for bid in occurrences[name]:
            peel = meta.peels.get(bid)
            if peel == ir.WARP:
                in_warp_peel = True
            elif peel == ir.BLOCK:
                in_block_peel = True
            if bid in warp_m:
                warp_ids.add(warp_m[bid])
            if bid in block_m:
                block_ids.add(block_m[bid])
        crossing_block = len(block_ids) > 1 or in_block_peel
        crossing_warp = crossing_block or len(warp_ids) > 1 or in_warp_peel
        if meta.mode == "flat":
            if crossing_block:
                replicated[name] = ReplicatedLocal(name, cfg.symbols.locals[name], ir.BLOCK)
        elif crossing_block:
            replicated[name] = ReplicatedLocal(name, cfg.symbols.locals[name], ir.BLOCK)
        elif crossing_warp:
            replicated[name] = ReplicatedLocal(name, cfg.symbols.locals[name], ir.WARP)
    return replicated


class _Rewriter:
    def __init__(self, cfg: ir.Cfg, meta: TransformMeta, replicated: dict, warp_size: int):
        self.cfg = cfg
        self.meta = meta
        self.replicated = replicated
        self.warp_size = warp_size
        self.flat = meta.mode == "flat"

    def thread_index(self, peel) -> n.Expr:
        """Expression for the simulated thread id in the current block."""
        if self.flat:
            return n.IntLit(0) if peel is not None else n.VarRef(TX)
        if peel == ir.BLOCK:
            return n.IntLit(0)
        wid_part = n.Binary("*", n.VarRef(WID), n.IntLit(self.warp_size))
        if peel == ir.WARP:
            return wid_part
        return n.Binary("+", wid_part, n.VarRef(TX))

    def slot(self, extent: str, peel) -> n.Expr:
        if self.flat or extent == ir.BLOCK:
            return self.thread_index(peel)
        # warp extent: lane slot
        if peel is not None:
            return n.IntLit(0)
        return n.VarRef(TX)

    def lane(self, peel) -> n.Expr:
        return n.IntLit(0) if peel is not None else n.VarRef(TX)

    def expr(self, e: n.Expr, peel) -> n.Expr:
        if isinstance(e, n.VarRef):
            r = self.replicated.get(e.name)
            if r is not None:
                return n.IndexExpr(e.name, self.slot(r.extent, peel))
            return e
        if isinstance(e, n.BuiltinRef) and e.name == "threadIdx.x":
            return self.thread_index(peel)
        if isinstance(e, n.LaneIdx):
            return self.lane(peel)
        if isinstance(e, n.IndexExpr):
            return n.IndexExpr(e.base, self.expr(e.index, peel))
        if isinstance(e, n.Unary):
            return n.Unary(e.op, self.expr(e.operand, peel))
        if isinstance(e, n.Binary):
            return n.Binary(e.op, self.expr(e.left, peel), self.expr(e.right, peel))
        if isinstance(e, n.Select):
            return n.Select(self.expr(e.cond, peel),
                            self.expr(e.if_true, peel), self.expr(e.if_false, peel))
        return e

    def rewrite_block(self, blk: ir.Block, peel):
        out = []
        for instr in blk.instrs:
            if isinstance(instr, ir.Assign):
                t = instr.target
                if isinstance(t, n.VarTarget) and t.name in self.replicated:
                    r = self.replicated[t.name]
                    t = n.IndexTarget(t.name, self.slot(r.extent, peel))
                elif isinstance(t, n.IndexTarget):
                    t = n.IndexTarget(t.base, self.expr(t.index, peel))
                out.append(ir.Assign(instr.uid, t, self.expr(instr.expr, peel), instr.src_uid))
            else:
                out.append(instr)
        blk.instrs = out
        if isinstance(blk.term, ir.CondBr):
            blk.term = ir.CondBr(blk.term.uid, self.expr(blk.term.cond, peel),
                                 blk.term.then_target, blk.term.else_target)


def replicate_locals(cfg: ir.Cfg, meta: TransformMeta, warp_size: int) -> dict:
    """Classify, then rewrite every wrapped or peeled block. Returns the
    replication table {name: ReplicatedLocal}."""
    replicated = classify_locals(cfg, meta)
    rw = _Rewriter(cfg, meta, replicated, warp_size)
    wrapped = set()
    for level_map in meta.membership.values():
        wrapped.update(level_map)
    for bid in cfg.blocks:
        peel = meta.peels.get(bid)
        if bid in wrapped or peel is not None:
            rw.rewrite_block(cfg.blocks[bid], peel)
    return replicated
