"""Lower warp collectives to explicit lane-buffer traffic.

Each collective becomes: store this lane's operand into the lane buffer, a
warp barrier covering the read-after-write hazard, the read (reduction or
shifted-lane load), then a warp barrier covering the write-after-read hazard
so the next round cannot clobber pending reads. Two consecutive collectives
therefore produce four warp barriers.
"""

from __future__ import annotations

from ..dsl import nodes as n
from ..errors import ExecutionError, TransformError
from ..cfg import ir


def reduce_vote(buffer, kind: str) -> int:
    """Logical reduction over a fully written lane buffer.

    The lane-wise loop is the semantic definition; vectorized variants must
    agree with it.
    """
    if kind == "all":
        for v in buffer:
            if v == 0:
                return 0
        return 1
    if kind == "any":
        for v in buffer:
            if v != 0:
                return 1
        return 0
    raise ExecutionError(f"unknown vote kind {kind!r}")


def shuffle_down(buffer, lane: int, offset: int, width: int):
    """Value lane `lane` receives from a shuffle-down of `offset`.

    Out-of-range source lanes hand the lane its own stored value (the
    width-clamping rule of the source programming model).
    """
    src = lane + offset
    if 0 <= src < width:
        return buffer[src]
    return buffer[lane]


def _lane_plus(offset: n.Expr) -> n.Expr:
    return n.Binary("+", n.LaneIdx(), offset)


def lower_collectives(cfg: ir.Cfg, warp_size: int,
                      insert_raw: bool = True, insert_war: bool = True) -> ir.Cfg:
    """Replace collective markers in place; a kernel without collectives is
    returned unchanged. The insert_* flags exist for mutation testing only."""
    for blk in cfg.blocks.values():
        if not any(isinstance(i, ir.Collective) for i in blk.instrs):
            continue
        out: list[ir.Instr] = []
        for instr in blk.instrs:
            if not isinstance(instr, ir.Collective):
                out.append(instr)
                continue
            if instr.op == "shfl_down":
                buffer = ir.SHFL_BUFFER
                value = instr.args[0]
                offset = instr.args[1]
                src_lane = _lane_plus(offset)
                read = n.Select(
                    n.Binary("<", src_lane, n.IntLit(warp_size)),
                    n.IndexExpr(buffer, src_lane),
                    n.IndexExpr(buffer, n.LaneIdx()),
                )
            elif instr.op in ("vote_all", "vote_any"):
                buffer = ir.VOTE_BUFFER
                value = instr.args[0]
                read = n.VoteReduce(buffer, instr.op.removeprefix("vote_"))
            else:
                raise TransformError(f"unknown collective {instr.op!r}")
            out.append(ir.Assign(cfg.new_uid(), n.IndexTarget(buffer, n.LaneIdx()), value))
            if insert_raw:
                out.append(ir.Barrier(cfg.new_uid(), ir.WARP, ir.RAW_HAZARD))
            # the read carries the collective's identity for execution counting
            out.append(ir.Assign(cfg.new_uid(), n.VarTarget(instr.dest), read, src_uid=instr.uid))
            if insert_war:
                out.append(ir.Barrier(cfg.new_uid(), ir.WARP, ir.WAR_HAZARD))
        blk.instrs = out
    return cfg


def verify_hazard_barriers(cfg: ir.Cfg) -> None:
    """Structural scan: every lane-buffer write is followed by exactly one
    raw-hazard barrier before its read, and a war-hazard barrier before any
    subsequent write to the same buffer."""
    for bid, blk in cfg.blocks.items():
        state = None  # None | ("stored"|"read", buffer)
        for instr in blk.instrs:
            if isinstance(instr, ir.Assign) and isinstance(instr.target, n.IndexTarget) \
                    and instr.target.base in ir.LANE_BUFFERS:
                if state is not None and state[0] != "synced":
                    raise TransformError(f"{bid}: lane-buffer write while {state[0]} pending")
                state = ("stored", instr.target.base)
            elif isinstance(instr, ir.Barrier) and instr.origin == ir.RAW_HAZARD:
                if state is None or state[0] != "stored":
                    raise TransformError(f"{bid}: raw-hazard barrier without a pending store")
                state = ("fenced", state[1])
            elif isinstance(instr, ir.Assign) and _reads_lane_buffer(instr.expr):
                if state is None or state[0] != "fenced":
                    raise TransformError(f"{bid}: lane-buffer read not fenced by a raw-hazard barrier")
                state = ("read", state[1])
            elif isinstance(instr, ir.Barrier) and instr.origin == ir.WAR_HAZARD:
                if state is None or state[0] != "read":
                    raise TransformError(f"{bid}: war-hazard barrier without a pending read")
                state = ("synced", state[1])
        if state is not None and state[0] != "synced":
            raise TransformError(f"{bid}: collective sequence ends in state {state[0]}")


def _reads_lane_buffer(e: n.Expr) -> bool:
    for sub in n.walk_exprs(e):
        if isinstance(sub, n.VoteReduce):
            return True
        if isinstance(sub, n.IndexExpr) and sub.base in ir.LANE_BUFFERS:
            return True
    return False
