"""Insert the extra barriers that make barrier-delimited regions discoverable.

Three sources of extra barriers:
  * kernel boundaries: a block barrier at the start of the entry block and at
    the end of the exit block;
  * conditional constructs containing barriers: fences at the end of the
    if-head, the end of the if-body, and the start of the if-exit, found by
    walking the dominator tree up and the post-dominator tree down (tree walks
    cannot cycle around loop back edges, which is the termination guard);
  * loops containing barriers: fences around the latch branch, i.e. at the
    end of the latch and at the start of each branch target.

Inserted barriers take the level of the barrier that triggered them; a block
containing both levels counts as block level. The final step splits every
barrier-guarding branch into "compute the condition per thread" plus a bare
branch block reading thread 0's flag (loop peeling).
"""

from __future__ import annotations

from collections import deque

from ..dsl import nodes as n
from ..cfg import ir
from ..cfg.dom import DomTrees, compute_domtrees
from ..cfg.loops import find_loops


def _block_level(blk: ir.Block) -> str | None:
    levels = blk.barrier_levels()
    if ir.BLOCK in levels:
        return ir.BLOCK
    if ir.WARP in levels:
        return ir.WARP
    return None


def _subsumes(have: str, want: str) -> bool:
    return have == want or (have == ir.BLOCK and want == ir.WARP)


def insert_at_end(cfg: ir.Cfg, bid: str, level: str, hint: str) -> bool:
    """Barrier before the terminator; no-op if one of covering level is there."""
    blk = cfg.blocks[bid]
    if blk.peel_level is not None:
        # a peel block holds only the branch; its fence lives in the block it
        # was split from, so re-running the pass must not touch it
        preds = [p for p, b in cfg.blocks.items() if bid in ir.successors(b.term)]
        if len(preds) == 1:
            return insert_at_end(cfg, preds[0], level, hint)
        return False
    if blk.instrs and isinstance(blk.instrs[-1], ir.Barrier):
        existing = blk.instrs[-1]
        if _subsumes(existing.level, level):
            if hint == ir.H_FENCE_HEAD and existing.hint != ir.H_FENCE_HEAD:
                existing.hint = ir.H_FENCE_HEAD
            return False
    blk.instrs.append(ir.Barrier(cfg.new_uid(), level, ir.EXTRA, hint))
    return True


def insert_at_begin(cfg: ir.Cfg, bid: str, level: str, hint: str) -> bool:
    blk = cfg.blocks[bid]
    if blk.instrs and isinstance(blk.instrs[0], ir.Barrier):
        if _subsumes(blk.instrs[0].level, level):
            return False
    blk.instrs.insert(0, ir.Barrier(cfg.new_uid(), level, ir.EXTRA, hint))
    return True


def insert_boundary_barriers(cfg: ir.Cfg) -> ir.Cfg:
    insert_at_begin(cfg, cfg.entry, ir.BLOCK, ir.H_BOUNDARY)
    insert_at_end(cfg, cfg.exit, ir.BLOCK, ir.H_BOUNDARY)
    return cfg


def insert_if_barriers(cfg: ir.Cfg, trees: DomTrees | None = None) -> ir.Cfg:
    """Fence every conditionally executed barrier.

    For each block B holding a barrier that does not post-dominate the entry:
    walk up the immediate-dominator chain to the nearest block B does not
    post-dominate (the if-head) and fence its end; walk down the immediate
    post-dominator chain while B dominates (the rest of the if-body), fencing
    the last dominated block's end and the first non-dominated block's start
    (the if-exit). A newly fenced if-head that is itself conditional is
    re-enqueued. Inserting instructions never changes edges, so the trees
    stay valid for the whole fixpoint.
    """
    if trees is None:
        trees = compute_domtrees(cfg)
    dom, pdt = trees.dom, trees.postdom

    queue = deque(bid for bid, blk in cfg.blocks.items()
                  if blk.has_barrier() and not pdt.dominates(bid, cfg.entry))
    processed = set()
    while queue:
        bid = queue.popleft()
        if bid in processed:
            continue
        processed.add(bid)
        level = _block_level(cfg.blocks[bid])
        if level is None:
            continue

        nearest = dom.parent(bid)
        while nearest is not None and pdt.dominates(bid, nearest):
            nearest = dom.parent(nearest)
        if nearest is None:
            continue  # defensive: reached the entry without leaving the region
        insert_at_end(cfg, nearest, level, ir.H_FENCE_HEAD)

        pre = bid
        succ = pdt.parent(bid)
        while succ is not None and dom.dominates(bid, succ):
            pre = succ
            succ = pdt.parent(succ)
        if succ is not None:
            insert_at_begin(cfg, succ, level, ir.H_FENCE_EXIT)
        insert_at_end(cfg, pre, level, ir.H_FENCE_TAIL)

        if not pdt.dominates(nearest, cfg.entry) and nearest not in processed:
            queue.append(nearest)
    return cfg


def insert_for_barriers(cfg: ir.Cfg, loops=None) -> ir.Cfg:
    """Fence the back-edge branch of every loop whose body contains a barrier."""
    if loops is None:
        loops = find_loops(cfg)
    for loop in loops:
        level = None
        for bid in sorted(loop.body):
            lv = _block_level(cfg.blocks[bid])
            if lv == ir.BLOCK:
                level = ir.BLOCK
                break
            if lv == ir.WARP:
                level = ir.WARP
        if level is None:
            continue
        insert_at_end(cfg, loop.latch, level, ir.H_FENCE_HEAD)
        for target in ir.successors(cfg.blocks[loop.latch].term):
            insert_at_begin(cfg, target, level, ir.H_FENCE_EXIT)
        for e in loop.exit_blocks:
            insert_at_begin(cfg, e, level, ir.H_FENCE_EXIT)
    return cfg


def purity_split_cond(cfg: ir.Cfg) -> ir.Cfg:
    """Split every barrier-guarding conditional branch for loop peeling.

    A block that ends in [.. ; fence-head barrier; conditional branch] becomes
    two blocks: the original computes the branch flag per simulated thread
    (before its trailing barriers, so the evaluation lands inside a region and
    keeps any per-thread effects), and a new block holds only the branch on
    the flag. The branch block is marked as a peel block; region discovery
    skips it and the branch later reads thread 0's flag.
    """
    from ..cfg.build import infer_kind

    for bid in list(cfg.blocks):
        blk = cfg.blocks[bid]
        if not isinstance(blk.term, ir.CondBr):
            continue
        run_start = len(blk.instrs)
        while run_start > 0 and isinstance(blk.instrs[run_start - 1], ir.Barrier):
            run_start -= 1
        trailing = blk.instrs[run_start:]
        if not trailing or not any(b.hint == ir.H_FENCE_HEAD for b in trailing):
            continue
        level = ir.BLOCK if any(b.level == ir.BLOCK for b in trailing) else ir.WARP

        cond = blk.term.cond
        if isinstance(cond, n.VarRef) and cond.name.startswith("__flag"):
            flag_name = cond.name  # already split once; keep idempotent
        else:
            kind = infer_kind(cond, cfg.symbols)
            flag_name = cfg.fresh_local("__flag", kind)
            blk.instrs.insert(run_start, ir.Assign(cfg.new_uid(), n.VarTarget(flag_name), cond))

        peel = cfg.fresh_block(f"peel.{bid}")
        peel.term = ir.CondBr(blk.term.uid, n.VarRef(flag_name),
                              blk.term.then_target, blk.term.else_target)
        peel.peel_level = level
        blk.term = ir.Br(cfg.new_uid(), peel.bid)
    return cfg


def insert_extra_barriers(cfg: ir.Cfg, enable_if_extras: bool = True) -> ir.Cfg:
    """Boundary barriers, then the if/for rules to a fixed point, then the
    purity split. The if pass runs again after the loop pass because latch
    fences can make new blocks conditional."""
    insert_boundary_barriers(cfg)
    loops = find_loops(cfg)
    if enable_if_extras:
        insert_if_barriers(cfg)
    insert_for_barriers(cfg, loops)
    if enable_if_extras:
        insert_if_barriers(cfg)
    purity_split_cond(cfg)
    return cfg


def verify_fences(cfg: ir.Cfg) -> None:
    """Post-pass scan: every barrier-bearing conditional body is fenced.

    Checks that for each barrier block B not post-dominating the entry, the
    dominator walk target already carries a same-or-stricter fence, i.e. the
    insertion pass reached a fixed point.
    """
    from ..errors import TransformError

    trees = compute_domtrees(cfg)
    dom, pdt = trees.dom, trees.postdom
    for bid, blk in cfg.blocks.items():
        if not blk.has_barrier() or pdt.dominates(bid, cfg.entry):
            continue
        level = _block_level(blk)
        nearest = dom.parent(bid)
        while nearest is not None and pdt.dominates(bid, nearest):
            nearest = dom.parent(nearest)
        if nearest is None:
            continue
        head = cfg.blocks[nearest]
        if head.peel_level is not None:
            # the head was purity-split: the branch moved into this peel block
            # and the fence is the trailing barrier of its single predecessor
            preds = [p for p, b in cfg.blocks.items() if nearest in ir.successors(b.term)]
            if len(preds) != 1:
                raise TransformError(f"peel block {nearest} has {len(preds)} predecessors")
            head = cfg.blocks[preds[0]]
        if not (head.instrs and isinstance(head.instrs[-1], ir.Barrier)
                and _subsumes(head.instrs[-1].level, level)):
            raise TransformError(f"barrier in {bid} is not fenced at if-head {nearest}")
