"""Natural-loop discovery and CFG canonicalization.

Canonical form guarantees, for every loop: a dedicated preheader, a single
latch, dedicated exit blocks (no exit block reachable from outside the loop),
and the header dominating all exit blocks. The function as a whole has one
entry with no predecessors and one exit block ending in ret.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import TransformError
from . import ir
from .dom import DomTree, compute_dominators


@dataclass
class LoopInfo:
    header: str
    latch: str
    preheader: str
    body: set = field(default_factory=set)          # includes header and latch
    exiting_blocks: list = field(default_factory=list)
    exit_blocks: list = field(default_factory=list)


def _back_edges(cfg: ir.Cfg, dom: DomTree) -> list[tuple[str, str]]:
    edges = []
    for bid in cfg.blocks:
        for s in cfg.succs(bid):
            if dom.dominates(s, bid):
                edges.append((bid, s))
    return edges


def _natural_loop(cfg: ir.Cfg, header: str, latches: list[str]) -> set:
    body = {header}
    preds = cfg.preds()
    stack = list(latches)
    while stack:
        b = stack.pop()
        if b in body:
            continue
        body.add(b)
        stack.extend(preds[b])
    return body


def find_loops(cfg: ir.Cfg, dom: DomTree | None = None) -> list[LoopInfo]:
    """Loops of a canonical CFG, in deterministic (header-order) sequence."""
    if dom is None:
        dom = compute_dominators(cfg)
    by_header: dict[str, list] = {}
    for latch, header in _back_edges(cfg, dom):
        by_header.setdefault(header, []).append(latch)
    preds = cfg.preds()
    loops = []
    for header in cfg.blocks:
        if header not in by_header:
            continue
        latches = by_header[header]
        if len(latches) != 1:
            raise TransformError(f"loop at {header} has {len(latches)} latches; canonicalize first")
        body = _natural_loop(cfg, header, latches)
        outside_preds = [p for p in preds[header] if p not in body]
        if len(outside_preds) != 1:
            raise TransformError(f"loop at {header} lacks a unique preheader; canonicalize first")
        exiting, exits = [], []
        for b in sorted(body):
            for s in cfg.succs(b):
                if s not in body:
                    exiting.append(b)
                    if s not in exits:
                        exits.append(s)
        loops.append(LoopInfo(header, latches[0], outside_preds[0], body, exiting, exits))
    return loops


def _fold_trivial_condbr(cfg: ir.Cfg) -> None:
    for blk in cfg.blocks.values():
        t = blk.term
        if isinstance(t, ir.CondBr) and t.then_target == t.else_target:
            blk.term = ir.Br(t.uid, t.then_target)


def _unify_exits(cfg: ir.Cfg) -> None:
    rets = [bid for bid, blk in cfg.blocks.items() if isinstance(blk.term, ir.Ret)]
    if len(rets) == 1:
        cfg.exit = rets[0]
        return
    if not rets:
        raise TransformError("function has no return block")
    exit_blk = cfg.fresh_block("exit.unified")
    exit_blk.term = ir.Ret(cfg.new_uid())
    for bid in rets:
        cfg.blocks[bid].term = ir.Br(cfg.new_uid(), exit_blk.bid)
    cfg.exit = exit_blk.bid


def _ensure_fresh_entry(cfg: ir.Cfg) -> None:
    preds = cfg.preds()
    if preds[cfg.entry]:
        old = cfg.entry
        new = ir.Block(f"{old}.pre", term=ir.Br(cfg.new_uid(), old))
        # prepend so dumps keep entry first
        blocks = {new.bid: new}
        blocks.update(cfg.blocks)
        cfg.blocks = blocks
        cfg.entry = new.bid


def _merge_latches(cfg: ir.Cfg, header: str, latches: list[str]) -> None:
    merged = cfg.fresh_block(f"latch.{header}")
    merged.term = ir.Br(cfg.new_uid(), header)
    for latch in latches:
        cfg.blocks[latch].term = ir.retarget(cfg.blocks[latch].term, header, merged.bid)


def _insert_preheader(cfg: ir.Cfg, header: str, outside_preds: list[str]) -> None:
    pre = cfg.fresh_block(f"preheader.{header}")
    pre.term = ir.Br(cfg.new_uid(), header)
    for p in outside_preds:
        cfg.blocks[p].term = ir.retarget(cfg.blocks[p].term, header, pre.bid)


def _dedicate_exit(cfg: ir.Cfg, body: set, exit_block: str) -> None:
    dedicated = cfg.fresh_block(f"loopexit.{exit_block}")
    dedicated.term = ir.Br(cfg.new_uid(), exit_block)
    for b in sorted(body):
        for s in cfg.succs(b):
            if s == exit_block:
                cfg.blocks[b].term = ir.retarget(cfg.blocks[b].term, exit_block, dedicated.bid)


def canonicalize(cfg: ir.Cfg) -> ir.Cfg:
    """Normalize in place; idempotent."""
    cfg.drop_unreachable()
    _fold_trivial_condbr(cfg)
    _unify_exits(cfg)
    _ensure_fresh_entry(cfg)

    # loop normalization to a fixed point; each fix can shift the loop shape
    for _ in range(len(cfg.blocks) * 2 + 4):
        dom = compute_dominators(cfg)
        by_header: dict[str, list] = {}
        for latch, header in _back_edges(cfg, dom):
            by_header.setdefault(header, []).append(latch)
        preds = cfg.preds()
        changed = False
        for header in list(cfg.blocks):
            if header not in by_header:
                continue
            latches = by_header[header]
            body = _natural_loop(cfg, header, latches)
            if len(latches) > 1:
                _merge_latches(cfg, header, latches)
                changed = True
                break
            outside = [p for p in preds[header] if p not in body]
            if len(outside) != 1 or len(cfg.succs(outside[0])) != 1:
                _insert_preheader(cfg, header, outside)
                changed = True
                break
            for b in sorted(body):
                for s in cfg.succs(b):
                    if s not in body and any(p not in body for p in preds[s]):
                        _dedicate_exit(cfg, body, s)
                        changed = True
                        break
                if changed:
                    break
            if changed:
                break
        if not changed:
            break
    else:
        raise TransformError("canonicalization did not converge")

    verify_canonical(cfg)
    return cfg


def verify_canonical(cfg: ir.Cfg) -> None:
    preds = cfg.preds()
    if preds[cfg.entry]:
        raise TransformError("entry block has predecessors")
    if not isinstance(cfg.blocks[cfg.exit].term, ir.Ret):
        raise TransformError("exit block does not return")
    rets = [b for b, blk in cfg.blocks.items() if isinstance(blk.term, ir.Ret)]
    if rets != [cfg.exit]:
        raise TransformError(f"expected a single return block, found {rets}")
    for bid, blk in cfg.blocks.items():
        if blk.term is None:
            raise TransformError(f"block {bid} has no terminator")
        for s in ir.successors(blk.term):
            if s not in cfg.blocks:
                raise TransformError(f"block {bid} branches to unknown block {s}")
    dom = compute_dominators(cfg)
    for loop in find_loops(cfg, dom):
        for e in loop.exit_blocks:
            if not dom.dominates(loop.header, e):
                raise TransformError(f"loop header {loop.header} does not dominate exit {e}")
            if any(p not in loop.body for p in preds[e]):
                raise TransformError(f"loop exit {e} is reachable from outside the loop")
